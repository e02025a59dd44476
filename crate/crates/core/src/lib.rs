pub mod agc_circuit;
pub mod bmi;
pub mod design_pipeline;
pub mod linalg;
pub mod lp;
pub mod memristor;
pub mod minimax_eig;
pub mod plant;
pub mod rgs;
pub mod uncertainty;
