//! CSV node/edge files.
//!
//! Node file: header `id,label,feat_0,...,feat_{d-1}[,text]`, ids dense and
//! 0-based (any row order). Edge file: header `src,dst`, one undirected edge
//! per row in either orientation.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::Graph;
use crate::error::{Error, Result};

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file))
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_parse_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    parse_err(path, line, e.to_string())
}

/// Loads and validates a graph. When `num_classes` is `None` the class count
/// is inferred as `max(label) + 1`.
pub fn load_graph(
    node_path: impl AsRef<Path>,
    edge_path: impl AsRef<Path>,
    num_classes: Option<usize>,
) -> Result<Graph> {
    let node_path = node_path.as_ref();
    let edge_path = edge_path.as_ref();

    let mut rdr = reader(node_path)?;
    let headers = rdr.headers().map_err(|e| csv_parse_err(node_path, e))?.clone();
    if headers.len() < 2 || &headers[0] != "id" || &headers[1] != "label" {
        return Err(parse_err(node_path, 1, "header must start with `id,label`"));
    }
    let has_text = headers.iter().next_back() == Some("text");
    let feat_dim = headers.len() - 2 - usize::from(has_text);
    for (k, h) in headers.iter().skip(2).take(feat_dim).enumerate() {
        if h != format!("feat_{k}") {
            return Err(parse_err(node_path, 1, format!("expected column feat_{k}, found {h:?}")));
        }
    }

    let mut rows: Vec<(usize, usize, Vec<f64>, Option<String>, u64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_parse_err(node_path, e))?;
        let line = record_line(&rec);
        let id: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(node_path, line, format!("bad node id {:?}", &rec[0])))?;
        let label: usize = rec[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(node_path, line, format!("bad label {:?}", &rec[1])))?;
        let feats = (0..feat_dim)
            .map(|k| {
                let s = &rec[2 + k];
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(node_path, line, format!("bad feature value {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let text = has_text.then(|| rec[2 + feat_dim].to_string());
        rows.push((id, label, feats, text, line));
    }

    let n = rows.len();
    let mut features = Array2::zeros((n, feat_dim));
    let mut labels = vec![0usize; n];
    let mut texts = has_text.then(|| vec![String::new(); n]);
    let mut seen = vec![false; n];
    for (id, label, feats, text, line) in rows {
        if id >= n {
            return Err(parse_err(node_path, line, format!("node id {id} is not dense (n = {n})")));
        }
        if std::mem::replace(&mut seen[id], true) {
            return Err(parse_err(node_path, line, format!("duplicate node id {id}")));
        }
        labels[id] = label;
        for (k, v) in feats.into_iter().enumerate() {
            features[[id, k]] = v;
        }
        if let (Some(t), Some(text)) = (texts.as_mut(), text) {
            t[id] = text;
        }
    }

    let mut rdr = reader(edge_path)?;
    let headers = rdr.headers().map_err(|e| csv_parse_err(edge_path, e))?.clone();
    if headers.len() != 2 || &headers[0] != "src" || &headers[1] != "dst" {
        return Err(parse_err(edge_path, 1, "header must be `src,dst`"));
    }
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_parse_err(edge_path, e))?;
        let line = record_line(&rec);
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(edge_path, line, format!("bad endpoint {s:?}")))
        };
        let (u, v) = (parse(&rec[0])?, parse(&rec[1])?);
        if u >= n || v >= n {
            return Err(Error::Validation(format!(
                "{}:{line}: dangling edge ({u}, {v}); graph has {n} nodes",
                edge_path.display()
            )));
        }
        edges.push((u, v));
    }

    let num_classes = num_classes.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    Graph::from_edges(features, labels, num_classes, &edges, texts)
}

/// Writes the graph in the same format `load_graph` reads: nodes in id order,
/// each undirected edge once as `u < v`.
pub fn save_graph(g: &Graph, node_path: impl AsRef<Path>, edge_path: impl AsRef<Path>) -> Result<()> {
    let node_path = node_path.as_ref();
    let edge_path = edge_path.as_ref();

    let file = File::create(node_path).map_err(|e| Error::io(node_path, e))?;
    let mut w = csv::WriterBuilder::new().from_writer(file);
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..g.feature_dim()).map(|k| format!("feat_{k}")));
    if g.texts().is_some() {
        header.push("text".into());
    }
    w.write_record(&header)?;
    for i in 0..g.num_nodes() {
        let mut row = vec![i.to_string(), g.labels()[i].to_string()];
        row.extend(g.features().row(i).iter().map(|v| v.to_string()));
        if let Some(t) = g.texts() {
            row.push(t[i].clone());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(node_path, e))?;

    let mut file = File::create(edge_path).map_err(|e| Error::io(edge_path, e))?;
    let mut out = String::from("src,dst\n");
    for (u, v) in g.edges() {
        out.push_str(&format!("{u},{v}\n"));
    }
    file.write_all(out.as_bytes()).map_err(|e| Error::io(edge_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn minimal_two_node_graph() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(dir.path(), "n.csv", "id,label,feat_0\n0,0,1.5\n1,1,-2\n");
        let edges = write(dir.path(), "e.csv", "src,dst\n0,1\n");
        let g = load_graph(&nodes, &edges, Some(2)).unwrap();
        assert_eq!(g.offsets(), &[0, 1, 2]);
        assert_eq!(g.features()[[1, 0]], -2.0);
    }

    #[test]
    fn label_equal_to_class_count_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(dir.path(), "n.csv", "id,label,feat_0\n0,0,1\n1,2,1\n");
        let edges = write(dir.path(), "e.csv", "src,dst\n");
        let err = load_graph(&nodes, &edges, Some(2)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_row_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(dir.path(), "n.csv", "id,label,feat_0\n0,0,1\n1,1,abc\n");
        let edges = write(dir.path(), "e.csv", "src,dst\n");
        match load_graph(&nodes, &edges, None).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn dangling_edge_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(dir.path(), "n.csv", "id,label,feat_0\n0,0,1\n1,1,1\n");
        let edges = write(dir.path(), "e.csv", "src,dst\n0,5\n");
        assert!(matches!(
            load_graph(&nodes, &edges, None).unwrap_err(),
            Error::Validation(_)
        ));
    }

    #[test]
    fn path_graph_degrees() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write(
            dir.path(),
            "n.csv",
            "id,label,feat_0\n0,0,0\n1,0,0\n2,0,0\n3,0,0\n4,0,0\n",
        );
        let edges = write(dir.path(), "e.csv", "src,dst\n1,0\n1,2\n3,2\n3,4\n");
        let g = load_graph(&nodes, &edges, None).unwrap();
        assert_eq!(g.degrees(), vec![1, 2, 2, 2, 1]);
    }

    #[test]
    fn text_column_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let body = "id,label,feat_0,feat_1,text\n0,1,0.25,1,\"a paper, with comma\"\n1,0,-3,0.5,plain\n";
        let nodes = write(dir.path(), "n.csv", body);
        let edges = write(dir.path(), "e.csv", "src,dst\n0,1\n");
        let g = load_graph(&nodes, &edges, None).unwrap();
        assert_eq!(g.texts().unwrap()[0], "a paper, with comma");
        let (n2, e2) = (dir.path().join("n2.csv"), dir.path().join("e2.csv"));
        save_graph(&g, &n2, &e2).unwrap();
        assert_eq!(fs::read_to_string(&n2).unwrap(), body);
        assert_eq!(fs::read_to_string(&e2).unwrap(), "src,dst\n0,1\n");
    }
}
