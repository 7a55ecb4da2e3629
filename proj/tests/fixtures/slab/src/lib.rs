//! Append-only slab keeping its own length beside a reserved vector and
//! moving entries with raw pointer copies.

pub struct Slab<T> {
    entries: Vec<T>,
    len: usize,
}

impl<T> Slab<T> {
    pub fn new() -> Slab<T> {
        Slab {
            entries: Vec::new(),
            len: 0,
        }
    }

    pub fn with_capacity(cap: usize) -> Slab<T> {
        let mut entries = Vec::with_capacity(cap);
        unsafe {
            entries.set_len(0);
        }
        Slab { entries, len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Appends a value, growing the backing storage when full.
    pub fn insert(&mut self, val: T) {
        unsafe {
            if self.len == self.entries.capacity() {
                self.entries.reserve(4);
            }
            let base = self.entries.as_mut_ptr();
            std::ptr::write(base.add(self.len), val);
            self.len += 1;
            self.entries.set_len(self.len);
        }
    }

    /// Removes and returns the entry at `index`, shifting the tail left.
    pub fn remove(&mut self, index: usize) -> T {
        assert!(index < self.len, "index out of bounds");
        unsafe {
            let base = self.entries.as_mut_ptr();
            let out = std::ptr::read(base.add(index));
            std::ptr::copy(base.add(index + 1), base.add(index), self.len - index);
            self.len -= 1;
            self.entries.set_len(self.len);
            out
        }
    }
}
