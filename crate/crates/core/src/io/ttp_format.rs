//! The textual TTP benchmark format.
//!
//! ```text
//! PROBLEM NAME:  demo
//! KNAPSACK DATA TYPE:  uncorrelated
//! DIMENSION:  3
//! NUMBER OF ITEMS:  2
//! CAPACITY OF KNAPSACK:  4
//! MIN SPEED:  0.1
//! MAX SPEED:  1
//! RENTING RATIO:  1.5
//! EDGE_WEIGHT_TYPE:  CEIL_2D
//! NODE_COORD_SECTION (INDEX, X, Y):
//! 1 0 0
//! 2 3 0
//! 3 3 4
//! ITEMS SECTION (INDEX, PROFIT, WEIGHT, ASSIGNED NODE NUMBER):
//! 1 10 2 2
//! 2 7 3 3
//! ```
//!
//! Fields are separated by tabs. Indices are 1-based in the file and 0-based
//! in [`TtpInstance`]. Reals are written with the shortest representation
//! that parses back to the same value, so integer-valued reals appear without
//! a fractional part.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::instance::{Item, Point, TtpError, TtpInstance};

const PROBLEM_NAME: &str = "PROBLEM NAME";
const KNAPSACK_TYPE: &str = "KNAPSACK DATA TYPE";
const DIMENSION: &str = "DIMENSION";
const NUMBER_OF_ITEMS: &str = "NUMBER OF ITEMS";
const CAPACITY: &str = "CAPACITY OF KNAPSACK";
const MIN_SPEED: &str = "MIN SPEED";
const MAX_SPEED: &str = "MAX SPEED";
const RENTING_RATIO: &str = "RENTING RATIO";
const EDGE_WEIGHT_TYPE: &str = "EDGE_WEIGHT_TYPE";
const NODE_SECTION: &str = "NODE_COORD_SECTION";
const ITEM_SECTION: &str = "ITEMS SECTION";

const HEADER_KEYS: [&str; 9] = [
    PROBLEM_NAME,
    KNAPSACK_TYPE,
    DIMENSION,
    NUMBER_OF_ITEMS,
    CAPACITY,
    MIN_SPEED,
    MAX_SPEED,
    RENTING_RATIO,
    EDGE_WEIGHT_TYPE,
];

/// A malformed instance file. `line` is 1-based; 0 means end of input.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Output options for [`write_instance_string`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteOptions {
    /// Round coordinates to integers, as in the published benchmark files.
    pub integer_coords: bool,
}

/// Serialises `instance` in the benchmark format.
pub fn write_instance_string(instance: &TtpInstance, options: WriteOptions) -> String {
    let mut out = String::new();
    let coord = |v: f64| if options.integer_coords { v.round() } else { v };
    let header = [
        (PROBLEM_NAME, instance.name.clone()),
        (KNAPSACK_TYPE, instance.knapsack_type.clone()),
        (DIMENSION, instance.num_nodes().to_string()),
        (NUMBER_OF_ITEMS, instance.num_items().to_string()),
        (CAPACITY, instance.capacity.to_string()),
        (MIN_SPEED, instance.min_speed.to_string()),
        (MAX_SPEED, instance.max_speed.to_string()),
        (RENTING_RATIO, instance.renting_rate.to_string()),
        (EDGE_WEIGHT_TYPE, "CEIL_2D".to_string()),
    ];
    for (key, value) in header {
        let _ = writeln!(out, "{key}: \t{value}");
    }
    let _ = writeln!(out, "{NODE_SECTION}\t(INDEX, X, Y):");
    for (i, p) in instance.nodes.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}\t{}", i + 1, coord(p.x), coord(p.y));
    }
    let _ = writeln!(
        out,
        "{ITEM_SECTION}\t(INDEX, PROFIT, WEIGHT, ASSIGNED NODE NUMBER):"
    );
    for (i, item) in instance.items.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            i + 1,
            item.profit,
            item.weight,
            item.node + 1
        );
    }
    out
}

pub fn write_instance(
    instance: &TtpInstance,
    path: impl AsRef<Path>,
    options: WriteOptions,
) -> std::io::Result<()> {
    fs::write(path, write_instance_string(instance, options))
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<TtpInstance, ReadError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ReadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text).map_err(|source| ReadError::Parse {
        path: path.display().to_string(),
        source,
    })
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            if !line.trim().is_empty() {
                return Some((i + 1, line.trim()));
            }
        }
        None
    }
}

fn number<T: std::str::FromStr>(line: usize, field: &str, text: &str) -> Result<T, ParseError> {
    text.parse()
        .map_err(|_| err(line, format!("invalid {field} '{text}'")))
}

fn real(line: usize, field: &str, text: &str) -> Result<f64, ParseError> {
    let v: f64 = number(line, field, text)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err(line, format!("{field} must be finite, got '{text}'")))
    }
}

/// Parses an instance and checks every [`TtpInstance`] invariant.
pub fn parse_instance(text: &str) -> Result<TtpInstance, ParseError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let mut header: Vec<Option<(usize, String)>> = vec![None; HEADER_KEYS.len()];

    let node_line = loop {
        let Some((no, line)) = lines.next() else {
            return Err(err(0, format!("missing {NODE_SECTION}")));
        };
        if line.starts_with(NODE_SECTION) {
            break no;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(err(no, format!("expected 'KEY: value', got '{line}'")));
        };
        let key = key.trim();
        let Some(slot) = HEADER_KEYS.iter().position(|k| *k == key) else {
            return Err(err(no, format!("unknown header key '{key}'")));
        };
        if header[slot].is_some() {
            return Err(err(no, format!("duplicate header key '{key}'")));
        }
        header[slot] = Some((no, value.trim().to_string()));
    };

    let mut field = |key: &str| -> Result<(usize, String), ParseError> {
        let slot = HEADER_KEYS
            .iter()
            .position(|k| *k == key)
            .expect("known key");
        header[slot]
            .take()
            .ok_or_else(|| err(node_line, format!("missing header key '{key}'")))
    };
    let (_, name) = field(PROBLEM_NAME)?;
    let (_, knapsack_type) = field(KNAPSACK_TYPE)?;
    let (dim_line, dim) = field(DIMENSION)?;
    let n: usize = number(dim_line, DIMENSION, &dim)?;
    let (items_line, count) = field(NUMBER_OF_ITEMS)?;
    let m: usize = number(items_line, NUMBER_OF_ITEMS, &count)?;
    let (capacity_line, capacity) = field(CAPACITY)?;
    let capacity = real(capacity_line, CAPACITY, &capacity)?;
    let (min_line, min_speed) = field(MIN_SPEED)?;
    let min_speed = real(min_line, MIN_SPEED, &min_speed)?;
    let (max_line, max_speed) = field(MAX_SPEED)?;
    let max_speed = real(max_line, MAX_SPEED, &max_speed)?;
    let (rent_line, rent) = field(RENTING_RATIO)?;
    let renting_rate = real(rent_line, RENTING_RATIO, &rent)?;
    let (edge_line, edge) = field(EDGE_WEIGHT_TYPE)?;
    if edge != "CEIL_2D" {
        return Err(err(
            edge_line,
            format!("unsupported edge weight type '{edge}'"),
        ));
    }

    let mut nodes = Vec::with_capacity(n);
    let mut node_lines = Vec::with_capacity(n);
    let item_line = loop {
        let Some((no, line)) = lines.next() else {
            return Err(err(0, format!("missing {ITEM_SECTION}")));
        };
        if line.starts_with(ITEM_SECTION) {
            break no;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [index, x, y] = fields[..] else {
            return Err(err(no, "node line needs index, x and y"));
        };
        let index: usize = number(no, "node index", index)?;
        if index != nodes.len() + 1 {
            return Err(err(
                no,
                format!("expected node index {}, got {index}", nodes.len() + 1),
            ));
        }
        nodes.push(Point::new(real(no, "x", x)?, real(no, "y", y)?));
        node_lines.push(no);
    };
    if nodes.len() != n {
        return Err(err(
            item_line,
            format!(
                "{DIMENSION} is {n} but {} node lines were given",
                nodes.len()
            ),
        ));
    }

    let mut items = Vec::with_capacity(m);
    let mut item_lines = Vec::with_capacity(m);
    while let Some((no, line)) = lines.next() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [index, profit, weight, node] = fields[..] else {
            return Err(err(no, "item line needs index, profit, weight and node"));
        };
        let index: usize = number(no, "item index", index)?;
        if index != items.len() + 1 {
            return Err(err(
                no,
                format!("expected item index {}, got {index}", items.len() + 1),
            ));
        }
        let node: usize = number(no, "node number", node)?;
        if node < 2 || node > n {
            return Err(err(
                no,
                format!("item assigned to node {node}, valid nodes are 2..={n}"),
            ));
        }
        items.push(Item {
            profit: real(no, "profit", profit)?,
            weight: real(no, "weight", weight)?,
            node: node - 1,
        });
        item_lines.push(no);
    }
    if items.len() != m {
        return Err(err(
            lines.last,
            format!(
                "{NUMBER_OF_ITEMS} is {m} but {} item lines were given",
                items.len()
            ),
        ));
    }

    let instance = TtpInstance {
        name,
        knapsack_type,
        nodes,
        items,
        capacity,
        renting_rate,
        min_speed,
        max_speed,
    };
    instance.validate().map_err(|e| {
        let line = match &e {
            TtpError::TooFewNodes(_) => dim_line,
            TtpError::NoItems => items_line,
            TtpError::BadCoordinate { index, .. } => node_lines[*index],
            TtpError::BadAvailability { index, .. } | TtpError::BadItem { index, .. } => {
                item_lines[*index]
            }
            TtpError::BadCapacity(_) => capacity_line,
            TtpError::BadRentingRate(_) => rent_line,
            TtpError::BadSpeeds { .. } => min_line,
            _ => 0,
        };
        err(line, e.to_string())
    })?;
    let total = instance.total_item_weight();
    if instance.capacity > total {
        return Err(err(
            capacity_line,
            format!(
                "capacity {} exceeds the total item weight {total}",
                instance.capacity
            ),
        ));
    }
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{random_instance, GenerationConfig};

    const DEMO: &str = "PROBLEM NAME: \tdemo
KNAPSACK DATA TYPE: \tuncorrelated
DIMENSION: \t3
NUMBER OF ITEMS: \t2
CAPACITY OF KNAPSACK: \t4
MIN SPEED: \t0.1
MAX SPEED: \t1
RENTING RATIO: \t1.5
EDGE_WEIGHT_TYPE: \tCEIL_2D
NODE_COORD_SECTION\t(INDEX, X, Y):
1\t0\t0
2\t3\t0
3\t3\t4
ITEMS SECTION\t(INDEX, PROFIT, WEIGHT, ASSIGNED NODE NUMBER):
1\t10\t2\t2
2\t7\t3\t3
";

    #[test]
    fn parses_demo() {
        let inst = parse_instance(DEMO).unwrap();
        assert_eq!(inst.num_nodes(), 3);
        assert_eq!(inst.items[1].node, 2);
        assert_eq!(inst.items[0].profit, 10.0);
        assert_eq!(inst.capacity, 4.0);
        assert_eq!(inst.renting_rate, 1.5);
        assert_eq!(write_instance_string(&inst, WriteOptions::default()), DEMO);
    }

    #[test]
    fn round_trip_generated() {
        for (ipn, seed) in [(1, 1), (3, 2), (10, 3)] {
            let inst = random_instance(&GenerationConfig::new(20, ipn), seed);
            let text = write_instance_string(&inst, WriteOptions::default());
            let back = parse_instance(&text).unwrap();
            assert_eq!(back, inst);
            assert_eq!(write_instance_string(&back, WriteOptions::default()), text);
        }
    }

    #[test]
    fn integer_coordinates() {
        let inst = random_instance(&GenerationConfig::new(10, 1), 4);
        let text = write_instance_string(
            &inst,
            WriteOptions {
                integer_coords: true,
            },
        );
        let back = parse_instance(&text).unwrap();
        for (a, b) in back.nodes.iter().zip(&inst.nodes) {
            assert_eq!(a.x, b.x.round());
            assert_eq!(a.y.fract(), 0.0);
        }
    }

    fn line_of(text: &str) -> usize {
        parse_instance(text).unwrap_err().line
    }

    #[test]
    fn item_at_start_city_rejected() {
        let bad = DEMO.replace("1\t10\t2\t2", "1\t10\t2\t1");
        assert_eq!(line_of(&bad), 15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let bad = DEMO.replace("DIMENSION: \t3", "DIMENSION: \t4");
        let e = parse_instance(&bad).unwrap_err();
        assert_eq!(e.line, 14);
        assert!(e.message.contains("node lines"));
    }

    #[test]
    fn structural_errors_have_locations() {
        assert_eq!(line_of(&DEMO.replace("2\t3\t0", "3\t3\t0")), 12);
        assert_eq!(
            line_of(&DEMO.replace("CAPACITY OF KNAPSACK: \t4", "CAPACITY OF KNAPSACK: \t6")),
            5
        );
        assert_eq!(line_of(&DEMO.replace("CEIL_2D", "EUC_2D")), 9);
        assert_eq!(line_of(&DEMO.replace("MAX SPEED", "TOP SPEED")), 7);
        assert_eq!(line_of(&DEMO.replace("2\t7\t3\t3\n", "")), 15);
        assert_eq!(line_of(&DEMO.replace("1\t10\t2\t2", "1\tten\t2\t2")), 15);
        assert_eq!(line_of(&DEMO.replace("RENTING RATIO: \t1.5\n", "")), 9);
        assert_eq!(line_of(&DEMO.replace("2\t3\t0", "2\t-3\t0")), 12);
    }
}
