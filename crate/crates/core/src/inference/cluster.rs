use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gateway::ModelGateway;

pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCluster {
    pub representative: String,
    /// (path index, sentence index)
    pub members: Vec<(usize, usize)>,
}

/// Single-pass greedy clustering in input order.
///
/// Each sentence joins the first cluster whose representative is at least
/// `threshold` similar, otherwise it starts a new cluster and represents it.
pub fn cluster_sentences(
    gateway: &dyn ModelGateway,
    sentences: &[((usize, usize), &str)],
    threshold: f64,
) -> Result<Vec<TopicCluster>> {
    let mut clusters: Vec<TopicCluster> = Vec::new();
    for &(id, text) in sentences {
        let pairs: Vec<(&str, &str)> = clusters.iter().map(|c| (text, c.representative.as_str())).collect();
        let sims = if pairs.is_empty() {
            Vec::new()
        } else {
            gateway.similarity_batch(&pairs)?
        };
        match sims.iter().position(|&s| s >= threshold) {
            Some(i) => clusters[i].members.push(id),
            None => clusters.push(TopicCluster {
                representative: text.to_string(),
                members: vec![id],
            }),
        }
    }
    Ok(clusters)
}
