//! Frame input and output: binary PGM sequences in, PGM or PFM feature maps out.

mod pnm;

pub use pnm::{
    display_normalized, list_frames, read_pfm, read_pgm, write_pfm, write_pgm16, write_pgm8, write_pgm_display, Pgm,
};
