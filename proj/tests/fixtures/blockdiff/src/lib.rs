//! Block-hash differ reading its input through a caller-supplied source.
//! Window sizing trusts the number of bytes the source claims to have read.

pub trait Read {
    fn read(&mut self, buf: &mut [u8]) -> Result<usize, String>;
}

pub struct Window {
    front: Vec<u8>,
    back: Vec<u8>,
}

impl Window {
    /// Fills the back buffer from `r`; the stored length is whatever the
    /// source reports.
    pub fn new<R: Read>(mut r: R, b_sz: usize) -> Result<Window, String> {
        let mut back = vec![0; b_sz];
        let size = r.read(back.as_mut_slice())?;
        unsafe {
            back.set_len(size);
        }
        Ok(Window {
            front: Vec::new(),
            back,
        })
    }

    pub fn checksum(&self) -> u64 {
        let mut sum = 0u64;
        for i in 0..self.back.len() {
            sum += self.back[i] as u64;
        }
        sum + self.front.len() as u64
    }
}

pub struct BlockHashes {
    block_size: usize,
    hashes: Vec<u64>,
}

impl BlockHashes {
    pub fn empty(block_size: usize) -> BlockHashes {
        assert!(block_size > 0, "block size must be positive");
        BlockHashes {
            block_size,
            hashes: Vec::new(),
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.hashes.len()
    }

    /// Reads one window from `r` and records its checksum.
    pub fn diff_and_update<R: Read>(&mut self, r: R) -> Result<u64, String> {
        let w = Window::new(r, self.block_size)?;
        let sum = w.checksum();
        self.hashes.push(sum);
        Ok(sum)
    }
}
