//! Accumulator with a single unsafe region of exactly ten code lines; the
//! flag argument gates two of them.

pub struct Acc {
    buf: Vec<u8>,
}

impl Acc {
    pub fn new() -> Acc {
        Acc {
            buf: vec![3, 5, 7, 9],
        }
    }

    pub fn stir(&mut self, flag: bool) -> u8 {
        let mut out = 0u8;
        unsafe {
            let p = self.buf.as_mut_ptr();
            let a = p.read();
            let b = p.add(1).read();
            out = out ^ a ^ b;
            p.write(out);
            p.add(1).write(a);
            if flag {
                p.add(2).write(b);
                p.add(3).write(out);
            }
            out = out ^ p.read();
        }
        out
    }
}

#[cfg(feature = "wild")]
pub fn gated(v: &mut Vec<u8>) {
    unsafe {
        v.set_len(0);
    }
}
