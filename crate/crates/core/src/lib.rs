//! Cell complexes, exact integral homology, finite cyclic coverings and the
//! tower constructions built on top of them.

pub mod ball;
pub mod cellmap;
pub mod chain;
pub mod complex;
pub mod construct;
pub mod covering;
pub mod homology;
pub mod kp;
pub mod matrix;
pub mod report;
pub mod orchestrator;
pub mod towers;

// The book chapters are compiled as doctests so their snippets cannot rot.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/complexes.md")]
    mod complexes {}
    #[doc = include_str!("../../../book/src/homology.md")]
    mod homology {}
    #[doc = include_str!("../../../book/src/coverings.md")]
    mod coverings {}
    #[doc = include_str!("../../../book/src/surfaces.md")]
    mod surfaces {}
    #[doc = include_str!("../../../book/src/extensions.md")]
    mod extensions {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
