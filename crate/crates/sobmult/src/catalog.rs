//! Built-in symbols used by the CLI and the test rig.

use crate::expr::parse;
use crate::funcspace::DifferentiableFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogEntry {
    /// Unique short name accepted by `--catalog`.
    pub name: &'static str,
    /// Expression in the symbol grammar; also accepted as a lookup key.
    pub expression: &'static str,
    pub singularities: &'static [f64],
    pub description: &'static str,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "sin1x",
        expression: "sin(1/x)",
        singularities: &[0.0],
        description: "bounded, oscillates without limit at 0",
    },
    CatalogEntry {
        name: "invx",
        expression: "1/x",
        singularities: &[0.0],
        description: "simple pole at 0",
    },
    CatalogEntry {
        name: "exp1x",
        expression: "exp(1/x)",
        singularities: &[0.0],
        description: "grows faster than any power at 0",
    },
    CatalogEntry {
        name: "semicircle",
        expression: "sqrt(1/4-(x-1/2)^2)",
        singularities: &[0.0, 1.0],
        description: "bounded by 1/2, vertical tangents at both endpoints",
    },
    CatalogEntry {
        name: "hump",
        expression: "x*(1-x)",
        singularities: &[],
        description: "parabolic arch vanishing at both endpoints",
    },
    CatalogEntry {
        name: "hump2",
        expression: "x^2*(1-x)",
        singularities: &[],
        description: "cubic arch vanishing at both endpoints",
    },
    CatalogEntry {
        name: "x",
        expression: "x",
        singularities: &[],
        description: "identity",
    },
    CatalogEntry {
        name: "x2",
        expression: "x^2",
        singularities: &[],
        description: "square",
    },
    CatalogEntry {
        name: "one",
        expression: "1",
        singularities: &[],
        description: "constant one",
    },
    CatalogEntry {
        name: "zero",
        expression: "0",
        singularities: &[],
        description: "constant zero",
    },
];

/// Looks an entry up by name or by its exact expression text.
pub fn resolve(key: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == key || e.expression == key)
}

/// Materializes an entry (parses its expression, attaches singularities).
pub fn build(entry: &CatalogEntry) -> DifferentiableFunction {
    let expr = parse(entry.expression).expect("catalog expressions parse");
    DifferentiableFunction::from_expr(&expr, entry.expression, entry.singularities.to_vec())
}
