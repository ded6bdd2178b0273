pub use navbridge_core as core;
