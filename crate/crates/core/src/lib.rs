pub mod combinat;
pub mod eigenmethod;
pub mod gaussian_limit;
pub mod heatop;
pub mod linalg;
pub mod numeric;
pub mod operators;
pub mod pde_appendix;
pub mod polyalg;
pub mod sphere_mc;
pub mod study;
pub mod verify;
