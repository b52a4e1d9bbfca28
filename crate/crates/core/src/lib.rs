pub mod conf;
pub mod curv;
pub mod geo;
pub mod heis;
pub mod invar;
pub mod linalg;
pub mod poly;
pub mod qalg;
pub mod scalar;
pub mod suite;
