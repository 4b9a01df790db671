//! Suspension flows over subshifts with locally constant roofs.
//!
//! A flow point is a base point, a coordinate on its orbit, and a height in
//! `[0, r)` above that coordinate; all times are exact field elements.

mod capacity;
mod entropy;
mod section;

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use capacity::{orbit_capacity, theta_slab_mass, OrbitCapacity};
pub use entropy::{
    abramov_entropy, first_return_distribution, induced_entropy_identity_check, kac_check,
    time_delta_tower_entropy, BasePartition, InducedCheck, KacCheck, ReturnDistribution,
    TowerEntropy,
};
pub use section::{
    CrossSection, GlobalityCertificate, ReturnHit, SectionPiece, SpectrumRow, TowerPartition,
};

use crate::error::{Error, Result};
use crate::quadratic::{QuadraticJson, QuadraticReal};
use crate::symbolic::{PointOracle, SharedPoint, Subshift, SubshiftSpec, Symbol, Word};

/// Locally constant roof: `r(x)` is looked up from `x[−m ..= m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Roof {
    radius: usize,
    values: HashMap<Word, QuadraticReal>,
    min: QuadraticReal,
}

impl Roof {
    pub fn new(radius: usize, values: impl IntoIterator<Item = (Word, QuadraticReal)>) -> Result<Self> {
        let values: HashMap<Word, QuadraticReal> = values.into_iter().collect();
        let mut min: Option<QuadraticReal> = None;
        for (w, v) in &values {
            if w.len() != 2 * radius + 1 {
                return Err(Error::Parse(format!(
                    "roof window {w} should have length {}",
                    2 * radius + 1
                )));
            }
            if !v.is_positive() {
                return Err(Error::PreconditionFailed(format!("roof value {v} on {w} is not positive")));
            }
            if let Some(m) = &min {
                m.try_cmp(v)?;
            }
            if min.as_ref().is_none_or(|m| v < m) {
                min = Some(v.clone());
            }
        }
        let min = min.ok_or_else(|| Error::Parse("empty roof table".into()))?;
        Ok(Self { radius, values, min })
    }

    /// `r(x) = values[x_0]`.
    pub fn symbolwise(values: Vec<QuadraticReal>) -> Result<Self> {
        Self::new(
            0,
            values
                .into_iter()
                .enumerate()
                .map(|(s, v)| (Word(vec![s as Symbol]), v)),
        )
    }

    pub fn constant(alphabet: usize, value: QuadraticReal) -> Result<Self> {
        Self::symbolwise(vec![value; alphabet])
    }

    /// Table over the admissible `(2m+1)`-words of `base`.
    pub fn from_fn(
        base: &Subshift,
        radius: usize,
        f: impl Fn(&[Symbol]) -> Result<QuadraticReal>,
    ) -> Result<Self> {
        let words = base.language(2 * radius + 1)?;
        let values = words
            .into_iter()
            .map(|w| f(&w).map(|v| (w, v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(radius, values)
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn min_value(&self) -> &QuadraticReal {
        &self.min
    }

    pub fn max_value(&self) -> QuadraticReal {
        self.values
            .values()
            .fold(self.min.clone(), |m, v| QuadraticReal::max_of(&m, v))
    }

    pub fn table(&self) -> &HashMap<Word, QuadraticReal> {
        &self.values
    }

    pub fn value(&self, window: &[Symbol]) -> Result<&QuadraticReal> {
        self.values
            .get(window)
            .ok_or_else(|| Error::Inadmissible(Word::from(window)))
    }

    /// `r(σⁱx)`.
    pub fn at(&self, point: &dyn PointOracle, i: i64) -> Result<QuadraticReal> {
        let m = self.radius as i64;
        let w = point.block(i - m, i + m + 1)?;
        self.value(&w).cloned()
    }

    /// Roof value for a word whose coordinate 0 sits at `offset` within it.
    pub fn at_offset(&self, word: &[Symbol], offset: usize) -> Result<&QuadraticReal> {
        let m = self.radius;
        if offset < m || offset + m + 1 > word.len() {
            return Err(Error::DepthExceeded {
                requested: offset + m + 1,
                certified: word.len(),
            });
        }
        self.value(&word[offset - m..offset + m + 1])
    }

    /// The table is defined on exactly the admissible `(2m+1)`-words.
    pub fn check_domain(&self, base: &Subshift) -> Result<()> {
        let words = base.language(2 * self.radius + 1)?;
        for w in &words {
            if !self.values.contains_key(w) {
                return Err(Error::PreconditionFailed(format!("roof undefined on admissible word {w}")));
            }
        }
        if words.len() != self.values.len() {
            return Err(Error::PreconditionFailed("roof defined on inadmissible words".into()));
        }
        Ok(())
    }

    /// Roof values as multiples of `delta`.
    pub fn levels(&self, delta: &QuadraticReal) -> Result<HashMap<Word, u64>> {
        self.values
            .iter()
            .map(|(w, v)| {
                let ratio = v.try_div(delta)?;
                if !ratio.is_rational() || !ratio.rational_part().is_integer() {
                    return Err(Error::IncommensurableRoof {
                        value: v.to_string(),
                        delta: delta.to_string(),
                    });
                }
                let n = ratio.floor();
                Ok((w.clone(), u64::try_from(n).map_err(|e| Error::Parse(e.to_string()))?))
            })
            .collect()
    }

    pub fn to_spec(&self) -> RoofSpec {
        RoofSpec {
            radius: self.radius,
            constant: None,
            values: self
                .values
                .iter()
                .map(|(w, v)| (w.to_string(), v.to_json_repr()))
                .collect(),
        }
    }
}

/// JSON roof: either a constant or a table over `(2m+1)`-words.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoofSpec {
    #[serde(default)]
    pub radius: usize,
    #[serde(default)]
    pub constant: Option<QuadraticJson>,
    #[serde(default)]
    pub values: BTreeMap<String, QuadraticJson>,
}

/// JSON flow description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub base: SubshiftSpec,
    #[serde(default = "default_radicand")]
    pub d: u32,
    pub roof: RoofSpec,
}

fn default_radicand() -> u32 {
    2
}

/// A point `(σⁱx, h)` of the suspension, `0 ≤ h < r(σⁱx)`.
#[derive(Clone)]
pub struct FlowPoint {
    pub point: SharedPoint,
    pub index: i64,
    pub height: QuadraticReal,
}

impl fmt::Debug for FlowPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowPoint")
            .field("index", &self.index)
            .field("height", &self.height.to_string())
            .finish()
    }
}

impl FlowPoint {
    pub fn base_block(&self, radius: i64) -> Result<Word> {
        self.point.block(self.index - radius, self.index + radius + 1)
    }

    /// Same base orbit, coordinate and height.
    pub fn same_as(&self, other: &FlowPoint, radius: i64) -> Result<bool> {
        Ok(self.height == other.height
            && self.base_block(radius)? == other.point.block(other.index - radius, other.index + radius + 1)?)
    }
}

#[derive(Clone, Debug)]
pub struct SuspensionFlow {
    base: Subshift,
    roof: Roof,
    max_shifts: usize,
}

impl SuspensionFlow {
    pub fn new(base: Subshift, roof: Roof) -> Result<Self> {
        if base.language(1)?.is_empty() {
            return Err(Error::EmptySubshift);
        }
        roof.check_domain(&base)?;
        Ok(Self {
            base,
            roof,
            max_shifts: 1_000_000,
        })
    }

    /// Bound on base shifts a single normalization may take.
    pub fn with_max_shifts(mut self, n: usize) -> Self {
        self.max_shifts = n;
        self
    }

    pub fn from_spec(spec: &FlowSpec) -> Result<Self> {
        let base = Subshift::from_spec(&spec.base)?;
        let roof = match &spec.roof.constant {
            Some(c) => Roof::constant(base.alphabet_size(), QuadraticReal::from_json_repr(c, spec.d)?)?,
            None => Roof::new(
                spec.roof.radius,
                spec.roof
                    .values
                    .iter()
                    .map(|(w, v)| Ok((w.parse::<Word>()?, QuadraticReal::from_json_repr(v, spec.d)?)))
                    .collect::<Result<Vec<_>>>()?,
            )?,
        };
        Self::new(base, roof)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FlowSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn base(&self) -> &Subshift {
        &self.base
    }

    pub fn roof(&self) -> &Roof {
        &self.roof
    }

    pub fn roof_at(&self, point: &dyn PointOracle, i: i64) -> Result<QuadraticReal> {
        self.roof.at(point, i)
    }

    /// The normalized point `(σ^index x, height)`; `height` may be any value.
    pub fn point(&self, point: SharedPoint, index: i64, height: QuadraticReal) -> Result<FlowPoint> {
        self.flow(
            &FlowPoint {
                point,
                index,
                height: QuadraticReal::zero(),
            },
            &height,
        )
    }

    /// `Φ_s(p)`, exact; `s` may be negative.
    pub fn flow(&self, p: &FlowPoint, s: &QuadraticReal) -> Result<FlowPoint> {
        let mut index = p.index;
        let mut h = p.height.try_add(s)?;
        let mut steps = 0usize;
        loop {
            if h.is_negative() {
                index -= 1;
                h = h.try_add(&self.roof.at(p.point.as_ref(), index)?)?;
            } else {
                let r = self.roof.at(p.point.as_ref(), index)?;
                if h < r {
                    break;
                }
                h = h.try_sub(&r)?;
                index += 1;
            }
            steps += 1;
            if steps > self.max_shifts {
                return Err(Error::HorizonExceeded {
                    start: p.index.min(index),
                    end: p.index.max(index),
                });
            }
        }
        Ok(FlowPoint {
            point: p.point.clone(),
            index,
            height: h,
        })
    }

    /// `Σ_{i ∈ [from, to)} r(σⁱx)`.
    pub fn roof_sum(&self, point: &dyn PointOracle, from: i64, to: i64) -> Result<QuadraticReal> {
        let m = self.roof.radius as i64;
        if to <= from {
            return Ok(QuadraticReal::zero());
        }
        let block = point.block(from - m, to + m)?;
        let mut total = QuadraticReal::zero();
        for i in 0..(to - from) as usize {
            total = total.try_add(self.roof.value(&block[i..i + 2 * m as usize + 1])?)?;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::symbolic::{PeriodicPoint, Sturmian, SturmianPoint};

    fn q(s: &str) -> QuadraticReal {
        s.parse().unwrap()
    }

    #[test]
    fn unit_roof_flow() {
        let flow = SuspensionFlow::new(Subshift::full_shift(2), Roof::constant(2, q("1")).unwrap()).unwrap();
        let x: SharedPoint = Arc::new(PeriodicPoint::new("01".parse().unwrap()).unwrap());
        let p = flow.point(x, 0, q("0")).unwrap();
        let moved = flow.flow(&p, &q("3/2")).unwrap();
        assert_eq!((moved.index, moved.height.clone()), (1, q("1/2")));
        let same = flow.flow(&p, &q("0")).unwrap();
        assert_eq!((same.index, same.height), (0, q("0")));
    }

    #[test]
    fn two_valued_roof_is_exact() {
        let roof = Roof::symbolwise(vec![q("1"), q("√2")]).unwrap();
        let flow = SuspensionFlow::new(Subshift::full_shift(2), roof).unwrap();
        let x: SharedPoint = Arc::new(PeriodicPoint::new("01".parse().unwrap()).unwrap());
        let p = flow.point(x, 0, q("0")).unwrap();
        let moved = flow.flow(&p, &q("1+√2")).unwrap();
        assert_eq!((moved.index, moved.height.clone()), (2, q("0")));
        let back = flow.flow(&moved, &q("-1/2")).unwrap();
        assert_eq!((back.index, back.height), (1, q("-1/2+√2")));
    }

    #[test]
    fn group_law_on_sturmian_flow() {
        let s = Sturmian::silver();
        let roof = Roof::symbolwise(vec![q("1"), q("√2")]).unwrap();
        let flow = SuspensionFlow::new(Subshift::Sturmian(s.clone()), roof).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let phase = QuadraticReal::from_ratio(rng.gen_range(0..1000), 1000);
            let x: SharedPoint = Arc::new(SturmianPoint::new(s.clone(), phase));
            let p = flow.point(x, 0, q("0")).unwrap();
            let a = QuadraticReal::from_parts((rng.gen_range(-50..50), 7), (rng.gen_range(-50..50), 5), 2).unwrap();
            let b = QuadraticReal::from_parts((rng.gen_range(-50..50), 3), (rng.gen_range(-50..50), 11), 2).unwrap();
            let lhs = flow.flow(&flow.flow(&p, &a).unwrap(), &b).unwrap();
            let rhs = flow.flow(&p, &(&a + &b)).unwrap();
            assert_eq!((lhs.index, lhs.height), (rhs.index, rhs.height));
        }
    }

    #[test]
    fn horizon_bound() {
        let flow = SuspensionFlow::new(Subshift::full_shift(2), Roof::constant(2, q("1")).unwrap())
            .unwrap()
            .with_max_shifts(10);
        let x: SharedPoint = Arc::new(PeriodicPoint::new("0".parse().unwrap()).unwrap());
        let p = flow.point(x, 0, q("0")).unwrap();
        assert!(matches!(flow.flow(&p, &q("100")), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn roof_validation_and_json() {
        assert!(Roof::symbolwise(vec![q("1"), q("0")]).is_err());
        let json = r#"{"base":{"kind":"sft","alphabet":2,"forbidden":["11"]},
            "roof":{"radius":0,"values":{"0":{"a":"1","b":"0"},"1":{"a":"0","b":"1"}}}}"#;
        let flow = SuspensionFlow::from_json(json).unwrap();
        assert_eq!(flow.roof().min_value(), &q("1"));
        let c = r#"{"base":{"kind":"sft","alphabet":2},"roof":{"constant":{"a":"2"}}}"#;
        assert_eq!(SuspensionFlow::from_json(c).unwrap().roof().max_value(), q("2"));
        let missing = r#"{"base":{"kind":"sft","alphabet":2},"roof":{"values":{"0":{"a":"1"}}}}"#;
        assert!(SuspensionFlow::from_json(missing).is_err());
        let levels = Roof::symbolwise(vec![q("2"), q("3")]).unwrap().levels(&q("1")).unwrap();
        assert_eq!(levels[&Word(vec![1])], 3);
        assert!(matches!(
            Roof::symbolwise(vec![q("√2")]).unwrap().levels(&q("1")),
            Err(Error::IncommensurableRoof { .. })
        ));
    }
}
