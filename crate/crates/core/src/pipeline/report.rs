//! Table, manifest and per-node CSV written from a [`UQResult`] alone, so a
//! persisted result regenerates the same bytes.

use std::path::{Path, PathBuf};

use serde_json::json;

use super::UQResult;
use crate::error::Result;
use crate::ffem::write_file;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub table: PathBuf,
    pub manifest: PathBuf,
    pub nodes: Option<PathBuf>,
}

pub fn table_csv(r: &UQResult) -> String {
    let mut s = String::from("axon,distance_mm,mean_mA,std_mA,cv\n");
    for (k, a) in r.axons.iter().enumerate() {
        s += &format!(
            "{},{:.3},{:.6},{:.6},{:.4}\n",
            k + 1,
            a.distance * 1e3,
            a.mean * 1e3,
            a.std * 1e3,
            a.std / a.mean
        );
    }
    s
}

pub fn manifest_json(r: &UQResult) -> Result<String> {
    let m = json!({
        "format": r.format,
        "version": r.version,
        "crate_version": r.crate_version,
        "config_hash": r.config_hash,
        "kl_seed": r.kl_seed,
        "level": r.level,
        "nodes": r.nodes.len(),
        "excluded_nodes": r.nodes.iter().enumerate().filter(|(_, n)| n.excluded).map(|(i, _)| i).collect::<Vec<_>>(),
        "axons": r.axons.len(),
        "config": r.config,
    });
    Ok(serde_json::to_string_pretty(&m)? + "\n")
}

pub fn nodes_csv(r: &UQResult) -> String {
    let dim = r.nodes.first().map_or(0, |n| n.y.len());
    let mut s = String::from("node,weight");
    for j in 1..=dim {
        s += &format!(",y{j}");
    }
    for k in 1..=r.axons.len() {
        s += &format!(",axon{k}_A");
    }
    s += ",excluded\n";
    for (i, n) in r.nodes.iter().enumerate() {
        s += &format!("{i},{:e}", n.weight);
        for y in &n.y {
            s += &format!(",{y:e}");
        }
        for t in &n.thresholds {
            match t {
                Some(v) => s += &format!(",{v:e}"),
                None => s += ",",
            }
        }
        s += &format!(",{}\n", n.excluded);
    }
    s
}

/// Writes `table.csv`, `manifest.json` and, if asked, `node_thresholds.csv`.
pub fn write_report(r: &UQResult, dir: impl AsRef<Path>, with_nodes: bool) -> Result<ReportFiles> {
    let dir = dir.as_ref();
    let files = ReportFiles {
        table: dir.join("table.csv"),
        manifest: dir.join("manifest.json"),
        nodes: with_nodes.then(|| dir.join("node_thresholds.csv")),
    };
    write_file(&files.table, &table_csv(r))?;
    write_file(&files.manifest, &manifest_json(r)?)?;
    if let Some(p) = &files.nodes {
        write_file(p, &nodes_csv(r))?;
    }
    Ok(files)
}
