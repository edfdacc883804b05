pub mod cli;
pub mod compact;
pub mod cuts;
pub mod lp;
pub mod master;
pub mod model;
pub mod oracle;
pub mod pricing;
pub mod routing;
pub mod search;
