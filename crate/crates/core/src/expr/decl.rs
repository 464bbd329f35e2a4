//! Keyed-section declaration files.
//!
//! ```text
//! # identity-like map with a cubic deformation
//! dims: 1 1
//! phi:
//!   x1 + x1^2
//! f: p1^2*x1
//! amplitude: 1 + hbar*p1
//! ```
//! A line `key:` opens a section; text after the colon and the following
//! lines up to the next key belong to it. `#` starts a comment.

use num_rational::BigRational;

use super::lower::lower;
use super::parse::parse_at;
use crate::error::{Error, Result};
use crate::series::{FormalSeries, HbarSeries, VarSet};

#[derive(Clone, Debug)]
pub struct Section {
    pub key: String,
    pub line: usize,
    /// `(line number, text)` with the key prefix blanked so columns stay accurate.
    pub lines: Vec<(usize, String)>,
}

impl Section {
    /// Non-blank content lines.
    pub fn content(&self) -> Vec<(usize, &str)> {
        self.lines.iter().filter(|(_, t)| !t.trim().is_empty()).map(|(n, t)| (*n, t.as_str())).collect()
    }

    /// The whole section as one expression text (newlines kept for diagnostics).
    pub fn text(&self) -> (usize, String) {
        let c = self.content();
        match c.first() {
            None => (self.line, String::new()),
            Some(&(first, _)) => {
                let mut s = String::new();
                let mut prev = first;
                for (n, t) in c {
                    for _ in prev..n {
                        s.push('\n');
                    }
                    s.push_str(t);
                    prev = n;
                }
                (first, s)
            }
        }
    }

    /// Whitespace-separated rational tokens (`3`, `-1/2`).
    pub fn rationals(&self) -> Result<Vec<BigRational>> {
        let mut out = Vec::new();
        for (n, t) in self.content() {
            for (col, word) in words(t) {
                out.push(word.parse().map_err(|_| Error::parse(n, col, format!("expected a rational number, got `{word}`")))?);
            }
        }
        Ok(out)
    }

    pub fn integers(&self) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (n, t) in self.content() {
            for (col, word) in words(t) {
                out.push(word.parse().map_err(|_| Error::parse(n, col, format!("expected a non-negative integer, got `{word}`")))?);
            }
        }
        Ok(out)
    }

    /// Rows of rationals, one row per non-blank line.
    pub fn rational_rows(&self) -> Result<Vec<(usize, Vec<BigRational>)>> {
        let mut out = Vec::new();
        for (n, t) in self.content() {
            let row = words(t)
                .map(|(col, w)| w.parse().map_err(|_| Error::parse(n, col, format!("expected a rational number, got `{w}`"))))
                .collect::<Result<Vec<_>>>()?;
            out.push((n, row));
        }
        Ok(out)
    }

    /// Parses and lowers the section as one expression.
    pub fn series(&self, vars: &VarSet, trunc: u32, hbar_order: u32, warnings: &mut Vec<String>) -> Result<HbarSeries> {
        let (line, text) = self.text();
        if text.trim().is_empty() {
            return Err(Error::parse(self.line, 1, format!("section `{}` is empty", self.key)));
        }
        let l = lower(&parse_at(&text, vars, line)?, vars, trunc, hbar_order)?;
        warnings.extend(l.warnings.iter().map(|w| format!("{}: {w}", self.key)));
        Ok(l.value)
    }

    /// As [`Section::series`] for ħ-free expressions.
    pub fn formal(&self, vars: &VarSet, trunc: u32, warnings: &mut Vec<String>) -> Result<FormalSeries> {
        let (line, text) = self.text();
        if text.trim().is_empty() {
            return Err(Error::parse(self.line, 1, format!("section `{}` is empty", self.key)));
        }
        let e = parse_at(&text, vars, line)?;
        if e.contains_hbar() {
            return Err(Error::parse(line, 1, format!("`hbar` is not allowed in section `{}`", self.key)));
        }
        let l = lower(&e, vars, trunc, 0)?;
        warnings.extend(l.warnings.iter().map(|w| format!("{}: {w}", self.key)));
        Ok(l.value.coeff(0).clone())
    }
}

fn words(t: &str) -> impl Iterator<Item = (usize, &str)> {
    let base = t.as_ptr() as usize;
    t.split_whitespace().map(move |w| (w.as_ptr() as usize - base + 1, w))
}

#[derive(Clone, Debug, Default)]
pub struct Sections {
    pub sections: Vec<Section>,
}

impl Sections {
    pub fn parse(text: &str) -> Result<Sections> {
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("");
            if let Some((key, rest)) = split_key(line) {
                if sections.iter().any(|s| s.key == key) {
                    return Err(Error::parse(n, 1, format!("duplicate section `{key}`")));
                }
                let blank = " ".repeat(line.len() - rest.len());
                sections.push(Section { key: key.to_string(), line: n, lines: vec![(n, format!("{blank}{rest}"))] });
            } else if let Some(cur) = sections.last_mut() {
                cur.lines.push((n, line.to_string()));
            } else if !line.trim().is_empty() {
                return Err(Error::parse(n, 1, "content before the first `key:` line"));
            }
        }
        Ok(Sections { sections })
    }

    pub fn get(&self, key: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.key == key)
    }

    pub fn require(&self, key: &str) -> Result<&Section> {
        self.get(key).ok_or_else(|| Error::parse(1, 1, format!("missing section `{key}:`")))
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for s in &self.sections {
            if !allowed.contains(&s.key.as_str()) {
                return Err(Error::parse(s.line, 1, format!("unknown section `{}` (expected one of: {})", s.key, allowed.join(", "))));
            }
        }
        Ok(())
    }

    /// `dims:` with exactly `n` entries.
    pub fn dims(&self, n: usize) -> Result<Vec<usize>> {
        let s = self.require("dims")?;
        let d = s.integers()?;
        if d.len() != n {
            return Err(Error::parse(s.line, 1, format!("`dims:` needs {n} integer(s), got {}", d.len())));
        }
        Ok(d)
    }
}

fn split_key(line: &str) -> Option<(&str, &str)> {
    let (key, rest) = line.split_once(':')?;
    let key = key.trim();
    let ok = !key.is_empty()
        && key.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    ok.then_some((key, rest))
}

/// The user-facing form of an enhanced micromorphism `U -> V` with `U ⊂ R^k`, `V ⊂ R^l`.
#[derive(Clone, Debug)]
pub struct Declaration {
    pub k: usize,
    pub l: usize,
    /// `k` components in `x1..xl`.
    pub phi: Vec<FormalSeries>,
    /// Deformation in `(p1..pk, x1..xl)`.
    pub f: FormalSeries,
    /// Amplitude in `(p1..pk, x1..xl)`; defaults to 1.
    pub amplitude: HbarSeries,
    pub warnings: Vec<String>,
}

impl Declaration {
    pub fn parse(text: &str, trunc: u32, hbar_order: u32) -> Result<Declaration> {
        let secs = Sections::parse(text)?;
        secs.only(&["dims", "phi", "f", "amplitude"])?;
        let d = secs.dims(2)?;
        let (k, l) = (d[0], d[1]);
        if k + l > crate::series::MAX_VARS / 2 {
            return Err(Error::Dimension(format!("dims {k} {l} exceed the supported size")));
        }
        let xs = VarSet::positions(l);
        let ps = VarSet::phase_space(k, l);
        let mut warnings = Vec::new();
        let phi_sec = secs.require("phi")?;
        let lines = phi_sec.content();
        if lines.len() != k {
            return Err(Error::Dimension(format!("`phi:` has {} component(s) but dims require {k}", lines.len())));
        }
        let mut phi = Vec::new();
        for (n, t) in lines {
            let e = parse_at(t, &xs, n)?;
            if e.contains_hbar() {
                return Err(Error::parse(n, 1, "`hbar` is not allowed in `phi:`"));
            }
            let low = lower(&e, &xs, trunc, 0)?;
            warnings.extend(low.warnings.iter().map(|w| format!("phi: {w}")));
            phi.push(low.value.coeff(0).clone());
        }
        let f = match secs.get("f") {
            Some(s) => s.formal(&ps, trunc, &mut warnings)?,
            None => FormalSeries::zero(&ps, trunc),
        };
        let amplitude = match secs.get("amplitude") {
            Some(s) => s.series(&ps, trunc, hbar_order, &mut warnings)?,
            None => HbarSeries::one(&ps, trunc, HbarSeries::max_order(trunc, hbar_order)),
        };
        Ok(Declaration { k, l, phi, f, amplitude, warnings })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Scalar;

    const SAMPLE: &str = "# sample\ndims: 1 1\nphi:\n  x1 + x1^2\nf: p1^2*x1\namplitude:\n  1 + hbar*p1\n";

    #[test]
    fn reads_sections() {
        let d = Declaration::parse(SAMPLE, 6, 3).unwrap();
        assert_eq!((d.k, d.l), (1, 1));
        assert_eq!(d.phi[0].coeff_of(&[2]), Scalar::one());
        assert_eq!(d.f.coeff_of(&[2, 1]), Scalar::one());
        assert_eq!(d.amplitude.coeff(1).coeff_of(&[1, 0]), Scalar::one());
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn diagnostics_carry_file_positions() {
        let bad = "dims: 1 1\nphi: x1\nf: p1^2*\n";
        let err = Declaration::parse(bad, 6, 3).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let bad_col = "dims: 1 1\nphi: x1 + y\n";
        assert!(matches!(Declaration::parse(bad_col, 6, 3).unwrap_err(), Error::Parse { line: 2, col: 11, .. }));
    }

    #[test]
    fn dimension_errors() {
        let bad = "dims: 2 1\nphi: x1\n";
        assert!(matches!(Declaration::parse(bad, 6, 3), Err(Error::Dimension(_))));
        assert!(Declaration::parse("dims: 1\nphi: x1\n", 6, 3).is_err());
        assert!(Declaration::parse("dims: 1 1\nphi: x1\nbogus: 3\n", 6, 3).is_err());
    }

    #[test]
    fn rationals_and_rows() {
        let s = Sections::parse("pi:\n 0 1/2\n -1/2 0\nx0: 3 -2\n").unwrap();
        let rows = s.get("pi").unwrap().rational_rows().unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].1[0], BigRational::new((-1).into(), 2.into()));
        assert_eq!(s.get("x0").unwrap().rationals().unwrap().len(), 2);
    }
}
