//! Communication-network triangulations of robot swarms on the unit sphere,
//! landing motions onto an obstacle torus, and winding-number certificates
//! of the forced change in network topology.

pub mod geom;
pub mod network;
pub mod poly;
pub mod spatial;
pub mod swarm;
pub mod motion;
pub mod topology;
pub mod triangulate;
