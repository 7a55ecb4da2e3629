//! Vector-backed deque whose shrink path rebuilds the buffer with raw
//! copies and swaps it into place.

pub struct SDeque<T> {
    buf: Vec<T>,
}

impl<T> SDeque<T> {
    pub fn new() -> SDeque<T> {
        SDeque { buf: Vec::new() }
    }

    pub fn with_capacity(cap: usize) -> SDeque<T> {
        SDeque {
            buf: Vec::with_capacity(cap),
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn capacity(&self) -> usize {
        self.buf.capacity()
    }

    pub fn push_back(&mut self, v: T) {
        self.buf.push(v);
    }

    pub fn pop_back(&mut self) -> Option<T> {
        self.buf.pop()
    }

    pub fn reserve_exact(&mut self, additional: usize) {
        self.buf.reserve_exact(additional);
    }

    /// Moves the contents into a right-sized buffer when it saves space.
    pub fn shrink_to_fit(&mut self) {
        let mut new_sd = SDeque::with_capacity(self.len());
        if new_sd.capacity() < self.capacity() {
            unsafe {
                std::ptr::copy_nonoverlapping(
                    self.buf.as_mut_ptr(),
                    new_sd.buf.as_mut_ptr(),
                    self.len(),
                );
                let n = self.len();
                new_sd.buf.set_len(n);
                std::mem::swap(self, &mut new_sd);
            }
        }
    }
}
