//! Graph → latent embedding → Vietoris–Rips persistence → landscape.
//!
//! Landscapes leave out the essential order-0 class; see
//! [`PersistenceDiagram::without_essential`].

use lsmtopo_core::landscape::{build_landscape, Landscape};
use lsmtopo_core::lsm::{fit_lsm, Embedding, FitConfig, Point};
use lsmtopo_core::netgen::Graph;
use lsmtopo_core::persistence::{diagram, vr_filtration, Convention, PersistenceDiagram};
use lsmtopo_core::Result;

/// Both landscape orders of one network, from a single fit.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSummary {
    pub embedding: Embedding,
    pub landscapes: [Landscape; 2],
    /// Set for empty and complete graphs, whose fit is clamped.
    pub degenerate: bool,
}

/// Landscape of the diagram with the essential component left out.
pub fn network_landscape(d: &PersistenceDiagram) -> Landscape {
    build_landscape(&d.without_essential())
}

pub fn positions_landscape(positions: &[Point], order: usize, convention: Convention) -> Result<Landscape> {
    let f = vr_filtration(positions, convention)?;
    Ok(network_landscape(&diagram(&f, order)?))
}

pub fn summarize(g: &Graph, convention: Convention, fit: &FitConfig) -> Result<NetworkSummary> {
    let embedding = fit_lsm(g, fit)?;
    let degenerate = g.edge_count() == 0 || g.density() >= 1.0;
    if degenerate {
        log::warn!("degenerate graph (density {}); landscape built from clamped fit", g.density());
    }
    let f = vr_filtration(&embedding.positions, convention)?;
    let landscapes = [network_landscape(&diagram(&f, 0)?), network_landscape(&diagram(&f, 1)?)];
    Ok(NetworkSummary { embedding, landscapes, degenerate })
}

pub fn pipeline(g: &Graph, order: usize, convention: Convention, fit: &FitConfig) -> Result<Landscape> {
    let embedding = fit_lsm(g, fit)?;
    positions_landscape(&embedding.positions, order, convention)
}
