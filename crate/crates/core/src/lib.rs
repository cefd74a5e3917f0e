pub mod lexparse;
pub mod rules;
pub mod extingest;
pub mod gitminer;
pub mod scripted;
pub mod lifecycle;
pub mod stats;
pub mod config;
pub mod pipeline;
pub mod cli;
