use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::Activation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    BaselineAE,
    Meud,
    MeudFf,
    MeudCoop,
    MeudFfCoop,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::BaselineAE,
        Variant::Meud,
        Variant::MeudFf,
        Variant::MeudCoop,
        Variant::MeudFfCoop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::BaselineAE => "BaselineAE",
            Variant::Meud => "MEUD",
            Variant::MeudFf => "MEUD_FF",
            Variant::MeudCoop => "MEUD_Coop",
            Variant::MeudFfCoop => "MEUD_FF_Coop",
        }
    }

    pub fn uses_ff(self) -> bool {
        matches!(self, Variant::MeudFf | Variant::MeudFfCoop)
    }

    pub fn uses_coop(self) -> bool {
        matches!(self, Variant::MeudCoop | Variant::MeudFfCoop)
    }

    pub(crate) fn tag(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Variant> {
        Variant::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Ok(match key.as_str() {
            "baselineae" | "ae" | "baseline" => Variant::BaselineAE,
            "meud" => Variant::Meud,
            "meudff" => Variant::MeudFf,
            "meudcoop" => Variant::MeudCoop,
            "meudffcoop" => Variant::MeudFfCoop,
            _ => return Err(Error::Config(format!("unknown variant {s:?}"))),
        })
    }
}

/// Layer widths, variant and initialization seed.
///
/// MEUD widths are `[n, r1, .., r, r, n]`: a strictly narrowing encoder
/// down to the bottleneck, a latent layer of the same width, and the output
/// layer. Baseline widths are an odd-length palindrome
/// `[n, .., r, .., n]` with the sigmoid latent layer in the middle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkConfig {
    pub widths: Vec<usize>,
    pub variant: Variant,
    pub seed: u64,
    /// Wrap the cooperation band around so the first and last latent nodes
    /// are neighbours.
    pub ring: bool,
}

impl NetworkConfig {
    pub fn new(widths: Vec<usize>, variant: Variant, seed: u64) -> Result<Self> {
        let cfg = NetworkConfig {
            widths,
            variant,
            seed,
            ring: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds widths for input width `n`, target dimension `r` and depth
    /// `s` (number of hidden layers including the latent one) using
    /// [`width_schedule`]. For the baseline the encoder is mirrored.
    pub fn for_dims(n: usize, r: usize, s: usize, variant: Variant, seed: u64) -> Result<Self> {
        if s < 2 {
            return Err(Error::Config(format!(
                "depth s must be at least 2, got {s}"
            )));
        }
        let encoder = width_schedule(n, r, s - 1)?;
        Self::new(Self::widths_from_encoder(&encoder, variant), variant, seed)
    }

    /// Converts MEUD widths `[n, .., r, r, n]` into the widths `variant`
    /// uses for the same encoder.
    pub fn from_meud_widths(meud: &[usize], variant: Variant, seed: u64) -> Result<Self> {
        if meud.len() < 4 {
            return Err(Error::Config(format!("MEUD widths too short: {meud:?}")));
        }
        let encoder = &meud[..meud.len() - 2];
        Self::new(Self::widths_from_encoder(encoder, variant), variant, seed)
    }

    fn widths_from_encoder(encoder: &[usize], variant: Variant) -> Vec<usize> {
        let mut w = encoder.to_vec();
        if variant == Variant::BaselineAE {
            w.extend(encoder.iter().rev().skip(1));
        } else {
            w.push(*encoder.last().expect("non-empty encoder"));
            w.push(encoder[0]);
        }
        w
    }

    pub fn with_ring(mut self, ring: bool) -> Result<Self> {
        self.ring = ring;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.widths;
        let bad = |why: &str| Err(Error::Config(format!("widths {w:?}: {why}")));
        if w.contains(&0) {
            return bad("zero width");
        }
        if self.variant == Variant::BaselineAE {
            if w.len() < 3 || w.len().is_multiple_of(2) {
                return bad("baseline needs an odd number of layers, at least 3");
            }
            if w.iter().ne(w.iter().rev()) {
                return bad("baseline widths must be palindromic");
            }
            if w[..=w.len() / 2].windows(2).any(|p| p[1] >= p[0]) {
                return bad("baseline encoder must narrow strictly");
            }
        } else {
            let s = w.len() - 2;
            if w.len() < 4 {
                return bad("MEUD needs at least 4 layers");
            }
            if w[0] != w[s + 1] {
                return bad("output width must equal input width");
            }
            if w[s] != w[s - 1] {
                return bad("latent and bottleneck widths must match");
            }
            if w[..s].windows(2).any(|p| p[1] >= p[0]) {
                return bad("encoder widths must decrease strictly");
            }
        }
        if self.ring && self.variant.uses_coop() && self.target_dim() < 3 {
            return bad("a ring band needs at least 3 latent nodes");
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len()
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    /// Index of the sigmoid layer whose output is the embedding.
    pub fn latent_index(&self) -> usize {
        match self.variant {
            Variant::BaselineAE => self.widths.len() / 2,
            _ => self.widths.len() - 2,
        }
    }

    pub fn target_dim(&self) -> usize {
        self.widths[self.latent_index()]
    }

    /// Connection carrying the cooperation band, if the variant has one.
    pub fn coop_connection(&self) -> Option<usize> {
        self.variant.uses_coop().then(|| self.latent_index() - 1)
    }

    /// Widths of the pretrainable encoder: input through bottleneck.
    pub fn encoder_widths(&self) -> &[usize] {
        &self.widths[..self.latent_index()]
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer == 0 {
            Activation::Identity
        } else if layer == self.latent_index() {
            Activation::Sigmoid
        } else {
            Activation::Relu
        }
    }
}

/// Strictly decreasing widths from `n` down to `r` in `steps` steps,
/// geometrically spaced and rounded. Returns `steps + 1` widths.
pub fn width_schedule(n: usize, r: usize, steps: usize) -> Result<Vec<usize>> {
    if steps == 0 || r == 0 || r + steps > n {
        return Err(Error::Config(format!(
            "cannot narrow {n} to {r} strictly in {steps} steps"
        )));
    }
    let ratio = (r as f64 / n as f64).powf(1.0 / steps as f64);
    let mut w: Vec<usize> = (0..=steps)
        .map(|k| (n as f64 * ratio.powi(k as i32)).round() as usize)
        .collect();
    w[0] = n;
    w[steps] = r;
    for k in 1..steps {
        let ceiling = w[k - 1] - 1;
        let floor = r + (steps - k);
        w[k] = w[k].clamp(floor, ceiling);
    }
    Ok(w)
}
