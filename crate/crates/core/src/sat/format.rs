//! Instance file format: `{"n": N, "clauses": [[var_a, sign_a, var_b, sign_b], ...]}`
//! with one-based variable indices and signs `±1`.

use serde::{Deserialize, Serialize};

use super::{Clause, Literal, Problem};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub clauses: Vec<[i64; 4]>,
}

fn literal(var: i64, sign: i64, n: usize) -> Result<Literal> {
    if var < 1 || var as u64 > n as u64 {
        return Err(Error::Structural(format!("variable index {var} outside 1..={n}")));
    }
    let positive = match sign {
        1 => true,
        -1 => false,
        other => return Err(Error::Structural(format!("sign {other} is not ±1"))),
    };
    Ok(Literal::new(var as usize - 1, positive))
}

impl TryFrom<ProblemFile> for Problem {
    type Error = Error;

    fn try_from(file: ProblemFile) -> Result<Self> {
        let clauses = file
            .clauses
            .iter()
            .map(|&[va, sa, vb, sb]| Ok(Clause::new(literal(va, sa, file.n)?, literal(vb, sb, file.n)?)))
            .collect::<Result<Vec<_>>>()?;
        Problem::new(file.n, clauses)
    }
}

impl From<Problem> for ProblemFile {
    fn from(p: Problem) -> Self {
        ProblemFile {
            n: p.n_vars(),
            clauses: p
                .clauses()
                .iter()
                .map(|c| {
                    [
                        c.a.var() as i64 + 1,
                        c.a.sign() as i64,
                        c.b.var() as i64 + 1,
                        c.b.sign() as i64,
                    ]
                })
                .collect(),
        }
    }
}

impl Problem {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("problem serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile =
            serde_json::from_str(text).map_err(|e| Error::Structural(format!("instance JSON: {e}")))?;
        Problem::try_from(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::random_problem;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_reference_layout() {
        let p = Problem::from_json(r#"{"n": 3, "clauses": [[1, 1, 2, -1], [3, -1, 1, 1]]}"#).unwrap();
        assert_eq!(p.n_vars(), 3);
        assert_eq!(p.clauses()[0].b, Literal::new(1, false));
        assert_eq!(p.to_json(), r#"{"n":3,"clauses":[[1,1,2,-1],[3,-1,1,1]]}"#);
    }

    #[test]
    fn rejects_bad_sign_and_index() {
        assert!(Problem::from_json(r#"{"n": 2, "clauses": [[1, 0, 2, 1]]}"#).is_err());
        assert!(Problem::from_json(r#"{"n": 2, "clauses": [[0, 1, 2, 1]]}"#).is_err());
        assert!(Problem::from_json(r#"{"n": 2, "clauses": [[1, 1, 3, 1]]}"#).is_err());
    }

    proptest! {
        #[test]
        fn json_roundtrip(seed in any::<u64>(), n in 2usize..20, m in 0usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_problem(n, m, &mut rng).unwrap();
            let back = Problem::from_json(&p.to_json()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
