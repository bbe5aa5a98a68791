//! Green's function of `div(a grad)` for two nearly touching disks with
//! piecewise-constant conductivity, built from the reflection series of the
//! two circle inversions, plus the potentials and solution formula that use it.

pub mod error;
pub mod geometry;
pub mod greens;
pub mod images;
pub mod moebius;
pub mod oracle;
pub mod potentials;
pub mod series;

pub use error::{Error, Result};
pub use geometry::{pt, Disk, Point, Region, RegionTag, TwoDiskConfig};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/maps.md")]
    mod maps {}
    #[doc = include_str!("../../../book/src/green.md")]
    mod green {}
    #[doc = include_str!("../../../book/src/solutions.md")]
    mod solutions {}
    #[doc = include_str!("../../../book/src/derivatives.md")]
    mod derivatives {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
