pub mod cli;
pub mod conll;
pub mod corpus;
pub mod model_io;
pub mod report;
pub mod xml;
