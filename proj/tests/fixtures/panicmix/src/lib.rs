//! Selector-driven scratch mixer used to exercise crash classification:
//! three branches end in guard panics, two corrupt memory for real.

pub struct Mixer {
    scratch: Vec<String>,
}

impl Mixer {
    pub fn new() -> Mixer {
        let mut scratch = Vec::new();
        scratch.push(String::from("alpha"));
        scratch.push(String::from("beta"));
        Mixer { scratch }
    }

    pub fn poke(&mut self, selector: u8, n: usize) -> usize {
        if selector < 48 {
            assert!(n < 10, "n out of contract");
            n
        } else if selector < 96 {
            let v = vec![1, 2, 3];
            v[n] as usize
        } else if selector < 120 {
            let mut acc = n;
            let mut i = 0;
            while i < 48 {
                acc = acc * (n + 2);
                i += 1;
            }
            acc
        } else if selector < 192 {
            unsafe {
                let base = self.scratch.as_mut_ptr();
                let dup = std::ptr::read(base);
                drop(dup);
            }
            self.scratch.truncate(0);
            0
        } else {
            unsafe {
                let base = self.scratch.as_mut_ptr();
                let beyond = base.add(self.scratch.capacity());
                std::ptr::write(beyond, String::from("spill"));
            }
            1
        }
    }
}
