//! Multi-fidelity surrogate architectures.

/// Placeholder while the module is under construction.
pub struct MfModel<T>(std::marker::PhantomData<T>);
