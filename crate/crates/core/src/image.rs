use crate::error::{Error, Result};

/// Row-major single-channel image of `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::param(format!("{} pixels do not fill a {width}x{height} image", pixels.len())));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Image { width, height, pixels: vec![0.0; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Image { width, height, pixels: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Image { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image { width: self.width, height: self.height, pixels: self.pixels.iter().map(|v| f(*v)).collect() }
    }

    /// Rotation by 90 degrees counter-clockwise in display orientation.
    pub fn rotate90(&self) -> Image {
        let (w, h) = (self.width, self.height);
        Image::from_fn(h, w, |x, y| self.get(w - 1 - y, x))
    }

    /// Position and value of the largest pixel.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = 0;
        for (i, v) in self.pixels.iter().enumerate() {
            if *v > self.pixels[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width, self.pixels[best])
    }

    pub fn max_abs(&self) -> f64 {
        self.pixels.iter().fold(0.0, |a, b| a.max(b.abs()))
    }
}
