//! Tiny shape library with one safe API that encapsulates raw-pointer code.

pub struct Shape {
    sid: u64,
}

impl Shape {
    /// Builds a shape with the given id.
    pub fn new(sid: u64) -> Self {
        Self { sid }
    }

    /// Builds the zero shape.
    pub fn zero() -> Self {
        Self { sid: 0 }
    }

    /// Mixes the descriptions of two user-provided describers into a scratch
    /// buffer using raw pointer writes.
    pub fn foo<S: STrait, U: UTrait>(&self, i1: S, i2: U) {
        let d1 = i1.desc();
        let d2 = i2.u_desc();
        let mut buf: Vec<u8> = Vec::with_capacity(4);
        buf.push((self.sid & 0xff) as u8);
        unsafe {
            let p = buf.as_mut_ptr();
            let first = p.read();
            p.write(first ^ (d1.len() as u8) ^ (d2.len() as u8));
        }
    }
}

pub trait STrait {
    fn desc(&self) -> String;
}

/// Implementors promise that `u_desc` stays in sync with the shape id.
pub unsafe trait UTrait {
    fn u_desc(&self) -> String;
}

impl STrait for Shape {
    fn desc(&self) -> String {
        String::from("shape")
    }
}

unsafe impl UTrait for Shape {
    fn u_desc(&self) -> String {
        String::from("ushape")
    }
}
