pub mod bounds;
pub mod error;
pub mod games;
pub mod pathrec;
pub mod permops;
pub mod qlinalg;
pub mod seeds;
pub mod tomography;
pub mod weingarten;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/permutations.md")]
    struct Permutations;
    #[doc = include_str!("../../../book/src/twirls.md")]
    struct Twirls;
    #[doc = include_str!("../../../book/src/path-recording.md")]
    struct PathRecording;
    #[doc = include_str!("../../../book/src/games.md")]
    struct Games;
    #[doc = include_str!("../../../book/src/tomography.md")]
    struct Tomography;
    #[doc = include_str!("../../../book/src/bounds.md")]
    struct Bounds;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
