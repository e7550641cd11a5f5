pub mod analysis;
pub mod cli;
pub mod engine;
pub mod seeding;
pub mod strategies;
pub mod tournament;
pub mod trials;
