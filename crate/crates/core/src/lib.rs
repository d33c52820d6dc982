pub mod bell;
pub mod corenum;
pub mod sysdsl;
pub mod melnikov;
pub mod guiding;
pub mod toruslab;
pub mod example4d;
