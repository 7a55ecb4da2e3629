//! Serialization demo crate: two same-named trait methods where the callee
//! depends on the caller's trait bound.

pub struct StructA {
    buf: Vec<u8>,
}

impl StructA {
    pub fn new() -> StructA {
        StructA { buf: Vec::new() }
    }
}

trait UnsafeSer {
    fn process(&self) -> Vec<u8>;
}

trait SafeSer {
    fn process(&self) -> Vec<u8>;
}

impl UnsafeSer for StructA {
    fn process(&self) -> Vec<u8> {
        let mut out = vec![0; self.buf.len() + 1];
        unsafe {
            let p = out.as_mut_ptr();
            p.write(7);
        }
        out
    }
}

impl SafeSer for StructA {
    fn process(&self) -> Vec<u8> {
        self.buf.clone()
    }
}

fn do_safe_ser<T: SafeSer>(dat: T) -> Vec<u8> {
    dat.process()
}

fn do_unsafe_ser<T: UnsafeSer>(dat: T) -> Vec<u8> {
    dat.process()
}

/// Caller must guarantee `addr` encodes an in-range byte.
pub unsafe fn unsafe_read(addr: usize) -> u8 {
    (addr & 0xff) as u8
}

pub fn safe_ser(sa: StructA) -> Vec<u8> {
    do_safe_ser(sa)
}

pub fn unsafe_ser(sa: StructA) -> Vec<u8> {
    do_unsafe_ser(sa)
}
