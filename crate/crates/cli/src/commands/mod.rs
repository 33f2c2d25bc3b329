pub mod dump_map;
pub mod reduce;
pub mod scan;
pub mod verify;
