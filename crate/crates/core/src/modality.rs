use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the three input streams. The derived ordering `Lab < Gene < Med`
/// is the concatenation order everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    Lab,
    Gene,
    Med,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Lab, Modality::Gene, Modality::Med];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Lab => "lab",
            Modality::Gene => "gene",
            Modality::Med => "med",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Modality::Lab => "Lab",
            Modality::Gene => "Gene",
            Modality::Med => "Med",
        };
        f.write_str(s)
    }
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lab" => Ok(Modality::Lab),
            "gene" => Ok(Modality::Gene),
            "med" => Ok(Modality::Med),
            other => Err(format!("unknown modality `{other}`")),
        }
    }
}

/// Nonempty subset of modalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModalitySubset(u8);

impl ModalitySubset {
    pub const FULL: ModalitySubset = ModalitySubset(0b111);

    pub fn new(modalities: &[Modality]) -> Option<Self> {
        let bits = modalities.iter().fold(0u8, |acc, m| acc | (1 << m.index()));
        (bits != 0).then_some(Self(bits))
    }

    pub fn single(m: Modality) -> Self {
        Self(1 << m.index())
    }

    /// All seven nonempty subsets: singles, then pairs, then the full set.
    pub fn all_nonempty() -> Vec<ModalitySubset> {
        let mut subsets: Vec<_> = (1u8..8).map(ModalitySubset).collect();
        subsets.sort_by_key(|s| (s.len(), s.0));
        subsets
    }

    pub fn contains(self, m: Modality) -> bool {
        self.0 & (1 << m.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn iter(self) -> impl Iterator<Item = Modality> {
        Modality::ALL.into_iter().filter(move |m| self.contains(*m))
    }
}

impl fmt::Display for ModalitySubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter().map(|m| m.to_string()).collect();
        f.write_str(&names.join("+"))
    }
}

impl FromStr for ModalitySubset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") || s.eq_ignore_ascii_case("full") {
            return Ok(Self::FULL);
        }
        let mods = s
            .split(['+', ','])
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Modality>, _>>()?;
        ModalitySubset::new(&mods).ok_or_else(|| "modality subset must be nonempty".to_string())
    }
}

impl TryFrom<String> for ModalitySubset {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ModalitySubset> for String {
    fn from(s: ModalitySubset) -> String {
        s.to_string()
    }
}

/// Column range `[start, end)` occupied by one modality in a concatenated
/// feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSpan {
    pub modality: Modality,
    pub start: usize,
    pub end: usize,
}

impl GroupSpan {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    pub fn width(&self) -> usize {
        self.end - self.start
    }
}

/// Consecutive spans of the given widths, starting at column 0.
pub fn layout_spans(widths: impl IntoIterator<Item = (Modality, usize)>) -> Vec<GroupSpan> {
    let mut start = 0;
    widths
        .into_iter()
        .map(|(modality, w)| {
            let span = GroupSpan { modality, start, end: start + w };
            start += w;
            span
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_subsets_in_size_order() {
        let all = ModalitySubset::all_nonempty();
        assert_eq!(all.len(), 7);
        assert_eq!(all[0].len(), 1);
        assert_eq!(all[6], ModalitySubset::FULL);
    }

    #[test]
    fn empty_subset_is_rejected() {
        assert!(ModalitySubset::new(&[]).is_none());
        assert!("".parse::<ModalitySubset>().is_err());
    }

    #[test]
    fn display_parse_round_trip() {
        for s in ModalitySubset::all_nonempty() {
            assert_eq!(s.to_string().parse::<ModalitySubset>().unwrap(), s);
        }
        assert_eq!(ModalitySubset::FULL.to_string(), "Lab+Gene+Med");
    }

    #[test]
    fn iteration_follows_fixed_order() {
        let s = ModalitySubset::new(&[Modality::Med, Modality::Lab]).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![Modality::Lab, Modality::Med]);
    }
}
