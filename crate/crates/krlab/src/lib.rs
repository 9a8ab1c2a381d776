//! Transverse Khovanov-Rozansky homology of closed braids and its skein
//! decategorification.

pub mod poly;
pub mod linalg;
pub mod mf;
pub mod moy;
pub mod braid;
pub mod qamod;
pub mod complex;
pub mod skein;
pub mod verify;
pub mod cli;
mod quotient;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/braids.md")]
    mod braids {}
    #[doc = include_str!("../../../book/src/factorizations.md")]
    mod factorizations {}
    #[doc = include_str!("../../../book/src/homology.md")]
    mod homology {}
    #[doc = include_str!("../../../book/src/skein.md")]
    mod skein {}
    #[doc = include_str!("../../../book/src/euler.md")]
    mod euler {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
