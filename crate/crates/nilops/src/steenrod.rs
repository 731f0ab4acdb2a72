//! The mod-2 Steenrod algebra in the admissible basis.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

/// An admissible monomial `Sq^{i₁} ⋯ Sq^{i_k}`, stored as `(i₁, …, i_k)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AdmissibleMonomial(pub Vec<u32>);

impl AdmissibleMonomial {
    pub fn identity() -> Self {
        AdmissibleMonomial(vec![])
    }

    pub fn new(exps: Vec<u32>) -> Option<Self> {
        is_admissible(&exps).then_some(AdmissibleMonomial(exps))
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn excess(&self) -> u32 {
        excess(&self.0)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }
}

impl std::fmt::Display for AdmissibleMonomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|i| format!("Sq{i}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// An F₂-linear combination of admissible monomials of one degree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OperationSum {
    pub degree: u32,
    pub terms: BTreeSet<AdmissibleMonomial>,
}

impl OperationSum {
    pub fn zero(degree: u32) -> Self {
        OperationSum { degree, terms: BTreeSet::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: AdmissibleMonomial) {
        if !self.terms.remove(&m) {
            self.terms.insert(m);
        }
    }
}

impl std::fmt::Display for OperationSum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|m| m.to_string()).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

pub fn is_admissible(exps: &[u32]) -> bool {
    exps.iter().all(|&i| i > 0) && exps.windows(2).all(|w| w[0] >= 2 * w[1])
}

/// Excess `2 i₁ − degree`; zero for the identity.
pub fn excess(exps: &[u32]) -> u32 {
    match exps.first() {
        None => 0,
        Some(&i1) => 2 * i1 - exps.iter().sum::<u32>(),
    }
}

/// `C(a, b) mod 2` for any integer `a`, using `(1+t)^a` for negative `a`.
pub fn binom2(a: i64, b: i64) -> bool {
    if b < 0 {
        return false;
    }
    if a >= 0 {
        b <= a && (a & b) == b
    } else {
        let top = b - a - 1;
        (top & b) == b
    }
}

type Memo = RwLock<HashMap<Vec<u32>, Arc<Vec<Vec<u32>>>>>;

fn memo() -> &'static Memo {
    static MEMO: OnceLock<Memo> = OnceLock::new();
    MEMO.get_or_init(|| RwLock::new(HashMap::new()))
}

/// One Adem expansion of `Sq^a Sq^b` with `a < 2b`.
pub fn adem_pair(a: u32, b: u32) -> Vec<Vec<u32>> {
    debug_assert!(a < 2 * b);
    let mut out = Vec::new();
    for k in 0..=a / 2 {
        if binom2((b - k - 1) as i64, (a - 2 * k) as i64) {
            let mut w = vec![a + b - k];
            if k > 0 {
                w.push(k);
            }
            out.push(w);
        }
    }
    out
}

fn normalize_words(word: &[u32]) -> Arc<Vec<Vec<u32>>> {
    let word: Vec<u32> = word.iter().copied().filter(|&i| i > 0).collect();
    if let Some(hit) = memo().read().unwrap().get(&word) {
        return hit.clone();
    }
    let result = match word.windows(2).position(|w| w[0] < 2 * w[1]) {
        None => vec![word.clone()],
        Some(p) => {
            let mut acc: BTreeSet<Vec<u32>> = BTreeSet::new();
            for rep in adem_pair(word[p], word[p + 1]) {
                let mut w = word[..p].to_vec();
                w.extend_from_slice(&rep);
                w.extend_from_slice(&word[p + 2..]);
                for t in normalize_words(&w).iter() {
                    if !acc.remove(t) {
                        acc.insert(t.clone());
                    }
                }
            }
            acc.into_iter().collect()
        }
    };
    let result = Arc::new(result);
    memo().write().unwrap().insert(word, result.clone());
    result
}

/// The admissible normal form of the product `Sq^{w₁} ⋯ Sq^{w_k}`.
///
/// Rewrites the leftmost inadmissible pair first; results are memoized.
pub fn adem_normalize(word: &[u32]) -> OperationSum {
    let degree = word.iter().sum();
    let mut s = OperationSum::zero(degree);
    for w in normalize_words(word).iter() {
        s.add_term(AdmissibleMonomial(w.clone()));
    }
    s
}

/// All admissible sequences of the given degree with first entry at most `upper`.
fn admissibles_upto(degree: u32, upper: u32, out: &mut Vec<Vec<u32>>, prefix: &mut Vec<u32>) {
    if degree == 0 {
        out.push(prefix.clone());
        return;
    }
    for i in (1..=degree.min(upper)).rev() {
        let rest = degree - i;
        if rest > 0 && i / 2 == 0 {
            continue;
        }
        prefix.push(i);
        admissibles_upto(rest, i / 2, out, prefix);
        prefix.pop();
    }
}

/// Admissible monomials of `degree` with excess at most `excess_bound`.
///
/// Ordered by decreasing first exponent, then recursively.
pub fn admissible_basis(degree: u32, excess_bound: u32) -> Vec<AdmissibleMonomial> {
    let mut all = Vec::new();
    admissibles_upto(degree, degree, &mut all, &mut Vec::new());
    all.into_iter()
        .filter(|w| excess(w) <= excess_bound)
        .map(AdmissibleMonomial)
        .collect()
}
