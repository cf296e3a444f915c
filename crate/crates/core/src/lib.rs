pub mod asymptotics;
pub mod dynamics;
pub mod error;
pub mod numerics;
pub mod sequence;
pub mod spectrum;
pub mod subordinacy;
pub mod tracemap;
pub mod transfer;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/sequence.md")]
    pub mod sequence {}
    #[doc = include_str!("../../../book/src/traces.md")]
    pub mod traces {}
    #[doc = include_str!("../../../book/src/transfer.md")]
    pub mod transfer {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    pub mod spectrum {}
    #[doc = include_str!("../../../book/src/classification.md")]
    pub mod classification {}
    #[doc = include_str!("../../../book/src/asymptotics.md")]
    pub mod asymptotics {}
    #[doc = include_str!("../../../book/src/subordinacy.md")]
    pub mod subordinacy {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
