//! `ODESA n__a_b__c` topology strings.
//!
//! `n` input channels, one `_`-separated neuron count per layer, and `c`
//! output classes. The last layer is the output layer and must hold a whole
//! number of neurons per class. `ODESA 4__4` is a single output layer.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub inputs: usize,
    /// Neurons per layer, input layer first.
    pub layers: Vec<usize>,
    pub classes: usize,
}

impl Topology {
    /// Synapses per neuron in layer `i` (0-based).
    pub fn fan_in(&self, i: usize) -> usize {
        if i == 0 {
            self.inputs
        } else {
            self.layers[i - 1]
        }
    }

    /// Output neurons per class.
    pub fn group_size(&self) -> usize {
        self.layers.last().copied().unwrap_or(0) / self.classes
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }
}

pub fn parse_topology(s: &str) -> Result<Topology> {
    let err = |msg: &str| Error::Topology(s.to_string(), msg.to_string());
    let body = s.trim();
    let body = body.strip_prefix("ODESA").ok_or_else(|| err("must start with `ODESA`"))?.trim();
    let parts: Vec<&str> = body.split("__").collect();
    let count = |p: &str| -> Result<usize> {
        match p.parse::<usize>() {
            Ok(0) => Err(err("counts must be positive")),
            Ok(n) => Ok(n),
            Err(_) => Err(err(&format!("`{p}` is not a count"))),
        }
    };
    let (inputs, layers, classes) = match parts.as_slice() {
        [i, c] => {
            let c = count(c)?;
            (count(i)?, vec![c], c)
        }
        [i, mid, c] => {
            let layers = mid.split('_').map(count).collect::<Result<Vec<_>>>()?;
            (count(i)?, layers, count(c)?)
        }
        _ => return Err(err("expected inputs__layers__classes")),
    };
    let out = *layers.last().unwrap();
    if out % classes != 0 {
        return Err(err(&format!("output layer of {out} neurons cannot split into {classes} classes")));
    }
    Ok(Topology { inputs, layers, classes })
}

impl FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_topology(s)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let layers: Vec<String> = self.layers.iter().map(ToString::to_string).collect();
        if self.layers.len() == 1 && self.layers[0] == self.classes {
            write!(f, "ODESA {}__{}", self.inputs, self.classes)
        } else {
            write!(f, "ODESA {}__{}__{}", self.inputs, layers.join("_"), self.classes)
        }
    }
}
