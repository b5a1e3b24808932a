pub mod bayes;
pub mod cli_io;
pub mod diagnostics;
pub mod error;
pub mod glk_dist;
pub mod inar;
pub mod special_fns;
