pub mod molgen;
