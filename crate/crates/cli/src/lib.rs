//! Library side of the `genderalt` command: the HTTP service and the HTTP
//! adapter transport.

pub mod http;
pub mod serve;
