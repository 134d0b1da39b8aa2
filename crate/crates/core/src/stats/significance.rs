use serde::{Deserialize, Serialize};

use super::{ranksum, StatsError};

/// Pairwise one-sided rank-sum wins between systems at level `alpha`.
/// `wins[i][j]` means system `i` scores significantly higher than `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceMatrix {
    pub systems: Vec<String>,
    pub alpha: f64,
    pub wins: Vec<Vec<bool>>,
    /// One-sided p-value for row over column; 1 on the diagonal.
    pub p_values: Vec<Vec<f64>>,
}

pub fn significance_matrix(samples: &[(String, Vec<f64>)], alpha: f64) -> Result<SignificanceMatrix, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::InsufficientSample {
            needed: 2,
            got: samples.len(),
        });
    }
    let k = samples.len();
    let mut wins = vec![vec![false; k]; k];
    let mut p_values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let r = ranksum(&samples[i].1, &samples[j].1)?;
            p_values[i][j] = r.p_greater;
            p_values[j][i] = r.p_less;
            wins[i][j] = r.p_greater < alpha;
            wins[j][i] = r.p_less < alpha;
        }
    }
    Ok(SignificanceMatrix {
        systems: samples.iter().map(|(s, _)| s.clone()).collect(),
        alpha,
        wins,
        p_values,
    })
}

impl SignificanceMatrix {
    pub fn win(&self, i: usize, j: usize) -> bool {
        self.wins[i][j]
    }

    /// Unordered pairs with no significant difference in either direction.
    pub fn tied_pairs(&self) -> Vec<(usize, usize)> {
        let k = self.systems.len();
        (0..k)
            .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.wins[i][j] && !self.wins[j][i])
            .collect()
    }

    /// Compact grid: `W` where the row system beats the column system.
    pub fn render_grid(&self) -> String {
        let width = self.systems.iter().map(String::len).max().unwrap_or(1).max(1);
        let mut out = format!("{:width$}", "");
        for s in &self.systems {
            out.push_str(&format!(" {s:>width$}"));
        }
        out.push('\n');
        for (i, s) in self.systems.iter().enumerate() {
            out.push_str(&format!("{s:width$}"));
            for j in 0..self.systems.len() {
                let cell = if self.wins[i][j] { "W" } else { "-" };
                out.push_str(&format!(" {cell:>width$}"));
            }
            out.push('\n');
        }
        out
    }

    /// `row \t column \t win \t p` for every ordered pair.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("row\tcolumn\twin\tp_one_sided\n");
        for (i, a) in self.systems.iter().enumerate() {
            for (j, b) in self.systems.iter().enumerate() {
                if i != j {
                    out.push_str(&format!("{a}\t{b}\t{}\t{:.6e}\n", self.wins[i][j], self.p_values[i][j]));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(rows: &[(&str, Vec<f64>)]) -> Vec<(String, Vec<f64>)> {
        rows.iter().map(|(n, v)| (n.to_string(), v.clone())).collect()
    }

    #[test]
    fn identical_samples_never_win() {
        let s = vec![0.1, 0.5, -0.3, 0.9];
        let m = significance_matrix(&named(&[("a", s.clone()), ("b", s)]), 0.05).unwrap();
        assert!(!m.win(0, 1) && !m.win(1, 0));
        assert_eq!(m.tied_pairs(), [(0, 1)]);
    }

    #[test]
    fn clear_separation_wins() {
        let m = significance_matrix(&named(&[("hi", vec![1.0; 10]), ("lo", vec![0.0; 10])]), 0.05).unwrap();
        assert!(m.win(0, 1) && !m.win(1, 0));
        assert!(m.tied_pairs().is_empty());
        let grid = m.render_grid();
        assert!(grid.lines().nth(1).unwrap().contains('W'));
        assert!(!grid.lines().nth(2).unwrap().contains('W'));
        assert_eq!(m.to_tsv().lines().count(), 3);
    }

    #[test]
    fn needs_two_systems() {
        assert!(significance_matrix(&named(&[("a", vec![1.0])]), 0.05).is_err());
    }
}
