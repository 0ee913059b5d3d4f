mod compare;
mod diagnose;
mod fit;
mod ppc;
mod simulate;
mod summarize;

pub use compare::compare;
pub use diagnose::diagnose;
pub use fit::fit;
pub use ppc::ppc;
pub use simulate::simulate;
pub use summarize::summarize;
