//! Emulated three-line character display.
//!
//! Lines longer than the display width scroll left one character per tick,
//! followed by a three-space gap before the text comes round again. Shorter
//! lines are shown as-is, padded with spaces.

pub const DISPLAY_LINES: usize = 3;
pub const DEFAULT_DISPLAY_WIDTH: usize = 16;
pub const SCROLL_GAP: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DisplayLine {
    content: Vec<char>,
    offset: usize,
}

impl DisplayLine {
    pub fn new(text: &str) -> Self {
        Self { content: text.chars().collect(), offset: 0 }
    }

    pub fn text(&self) -> String {
        self.content.iter().collect()
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    fn cycle_len(&self) -> usize {
        self.content.len() + SCROLL_GAP
    }

    fn scrolls(&self, width: usize) -> bool {
        self.content.len() > width
    }

    /// Replaces the text; the scroll position restarts only if it changed.
    pub fn set(&mut self, text: &str) {
        if !self.content.iter().copied().eq(text.chars()) {
            *self = Self::new(text);
        }
    }

    pub fn tick(&mut self, width: usize) {
        if self.scrolls(width) {
            self.offset = (self.offset + 1) % self.cycle_len();
        } else {
            self.offset = 0;
        }
    }

    /// Exactly `width` characters.
    pub fn render(&self, width: usize) -> String {
        if !self.scrolls(width) {
            let mut out = self.text();
            out.extend(std::iter::repeat_n(' ', width - self.content.len()));
            return out;
        }
        let cycle = self.cycle_len();
        (0..width)
            .map(|j| self.content.get((self.offset + j) % cycle).copied().unwrap_or(' '))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisplayModel {
    width: usize,
    lines: [DisplayLine; DISPLAY_LINES],
}

impl Default for DisplayModel {
    fn default() -> Self {
        Self::new(DEFAULT_DISPLAY_WIDTH)
    }
}

impl DisplayModel {
    pub fn new(width: usize) -> Self {
        assert!(width > 0, "display width must be positive");
        Self { width, lines: Default::default() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn line(&self, i: usize) -> &DisplayLine {
        &self.lines[i]
    }

    pub fn set_line(&mut self, i: usize, text: &str) {
        self.lines[i].set(text);
    }

    pub fn tick(&mut self) {
        for line in &mut self.lines {
            line.tick(self.width);
        }
    }

    pub fn render(&self) -> [String; DISPLAY_LINES] {
        std::array::from_fn(|i| self.lines[i].render(self.width))
    }
}

/// Returns `model` advanced by one scroll step.
pub fn display_tick(model: &DisplayModel) -> DisplayModel {
    let mut next = model.clone();
    next.tick();
    next
}
