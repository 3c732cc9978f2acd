//! Architecture sizing: hashed nets and their parameter-matched baselines.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Hashed,
    Small,
    Thin,
    Full,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "hashed" => Ok(Variant::Hashed),
            "small" => Ok(Variant::Small),
            "thin" => Ok(Variant::Thin),
            "full" => Ok(Variant::Full),
            other => Err(Error::invalid(format!("unknown variant '{other}'"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Variant::Hashed => "hashed",
            Variant::Small => "small",
            Variant::Thin => "thin",
            Variant::Full => "full",
        })
    }
}

/// Which layers of the hashed variant share buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashedScope {
    BothLayers,
    FirstLayerOnly,
}

#[derive(Debug, Clone)]
pub struct ArchitectureSpec {
    pub variant: Variant,
    pub n_in: usize,
    pub hidden: Vec<usize>,
    pub n_out: usize,
    pub ratio: usize,
    /// Bucket count per hashed layer, front to back; empty for dense nets.
    pub buckets: Vec<usize>,
    pub scope: HashedScope,
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Sizes a variant so its effective weight count tracks the hashed net at
/// the given compression ratio:
/// hashed  -> hidden k, buckets ceil(n k / r) and ceil(k n_out / r);
/// small   -> one hidden layer of ceil(k / r);
/// thin    -> hidden layers (ceil(n k / ((n + k) r)), k);
/// full    -> hidden k, dense.
pub fn size_match(
    variant: Variant,
    n_in: usize,
    k_hidden: usize,
    ratio: usize,
    n_out: usize,
) -> Result<ArchitectureSpec> {
    if ratio < 1 {
        return Err(Error::InvalidConfig("ratio must be >= 1".into()));
    }
    if n_in == 0 || k_hidden == 0 || n_out == 0 {
        return Err(Error::InvalidConfig("dimensions must be positive".into()));
    }
    let spec = match variant {
        Variant::Hashed => ArchitectureSpec {
            variant,
            n_in,
            hidden: vec![k_hidden],
            n_out,
            ratio,
            buckets: vec![
                ceil_div(n_in * k_hidden, ratio),
                ceil_div(k_hidden * n_out, ratio),
            ],
            scope: HashedScope::BothLayers,
        },
        Variant::Small => ArchitectureSpec {
            variant,
            n_in,
            hidden: vec![ceil_div(k_hidden, ratio)],
            n_out,
            ratio,
            buckets: vec![],
            scope: HashedScope::BothLayers,
        },
        Variant::Thin => ArchitectureSpec {
            variant,
            n_in,
            hidden: vec![
                ceil_div(n_in * k_hidden, (n_in + k_hidden) * ratio),
                k_hidden,
            ],
            n_out,
            ratio,
            buckets: vec![],
            scope: HashedScope::BothLayers,
        },
        Variant::Full => ArchitectureSpec {
            variant,
            n_in,
            hidden: vec![k_hidden],
            n_out,
            ratio: 1,
            buckets: vec![],
            scope: HashedScope::BothLayers,
        },
    };
    if spec.hidden.contains(&0) {
        return Err(Error::InvalidConfig(
            "compression ratio collapses a hidden layer to zero units".into(),
        ));
    }
    Ok(spec)
}

impl ArchitectureSpec {
    /// Restrict hashing to the first layer; the second stays dense.
    pub fn with_first_layer_only(mut self) -> ArchitectureSpec {
        if self.variant == Variant::Hashed && self.buckets.len() == 2 {
            self.scope = HashedScope::FirstLayerOnly;
            self.buckets.truncate(1);
        }
        self
    }

    /// Layer dimensions front to back: n_in, hidden..., n_out.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.n_in];
        d.extend(&self.hidden);
        d.push(self.n_out);
        d
    }

    /// Effective trainable weight count (bucket totals for hashed layers,
    /// dense matrix sizes otherwise). Biases excluded, matching the sizing
    /// formulas.
    pub fn effective_weight_count(&self) -> usize {
        let dims = self.dims();
        let mut total = 0;
        for (layer, w) in dims.windows(2).enumerate() {
            total += match self.buckets.get(layer) {
                Some(&b) => b,
                None => w[0] * w[1],
            };
        }
        total
    }
}
