use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{best_value, solve_time, Metric};
use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::solvers::TraceRow;

pub const LONG_FORMAT_FILE: &str = "profiles_long.csv";

/// Solve times `t[p][s]` (evaluations, `None` if unsolved) for a set of
/// problems and solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileInput {
    pub solvers: Vec<String>,
    pub problems: Vec<String>,
    /// Problem dimensions `n_p`.
    pub dims: Vec<usize>,
    pub t: Vec<Vec<Option<u64>>>,
}

impl ProfileInput {
    fn check(&self) -> Result<()> {
        if self.problems.is_empty() {
            return Err(Error::Profile("empty problem set".into()));
        }
        if self.dims.len() != self.problems.len()
            || self.t.len() != self.problems.len()
            || self.t.iter().any(|row| row.len() != self.solvers.len())
        {
            return Err(Error::Profile("inconsistent profile input shape".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProfileKind {
    Performance,
    Data,
}

impl ProfileKind {
    pub fn id(self) -> &'static str {
        match self {
            ProfileKind::Performance => "performance",
            ProfileKind::Data => "data",
        }
    }

    fn axis(self) -> &'static str {
        match self {
            ProfileKind::Performance => "gamma",
            ProfileKind::Data => "kappa",
        }
    }
}

/// Right-continuous step functions, one per solver, stored as the per-problem
/// abscissae at which each solver's curve steps up.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurves {
    pub kind: ProfileKind,
    pub solvers: Vec<String>,
    pub problem_count: usize,
    /// `steps[s]`: sorted finite abscissae (ratios or budget groups).
    pub steps: Vec<Vec<f64>>,
}

impl ProfileCurves {
    /// Fraction of problems whose abscissa for solver `s` is `<= x`.
    pub fn value(&self, s: usize, x: f64) -> f64 {
        if self.problem_count == 0 {
            return 0.0;
        }
        let hits = self.steps[s].partition_point(|&v| v <= x);
        hits as f64 / self.problem_count as f64
    }

    /// Union of all step locations plus the left end of the axis.
    pub fn breakpoints(&self) -> Vec<f64> {
        let start = match self.kind {
            ProfileKind::Performance => 1.0,
            ProfileKind::Data => 0.0,
        };
        let mut xs: Vec<f64> = std::iter::once(start).chain(self.steps.iter().flatten().copied()).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }

    pub fn to_wide_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(self.kind.axis());
        for s in &self.solvers {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        if self.problem_count == 0 {
            return out;
        }
        for x in self.breakpoints() {
            out.push_str(&fmt_f64(x));
            for s in 0..self.solvers.len() {
                out.push(',');
                out.push_str(&fmt_f64(self.value(s, x)));
            }
            out.push('\n');
        }
        out
    }
}

/// `rho_s(gamma) = |{p : t_ps / min_s' t_ps' <= gamma}| / |P|`.
///
/// Unsolved pairs never count. When the best time is `0`, solvers that
/// also need `0` evaluations get ratio `1` and all others ratio infinity.
pub fn performance_profile(input: &ProfileInput) -> Result<ProfileCurves> {
    input.check()?;
    let mut steps = vec![Vec::new(); input.solvers.len()];
    for row in &input.t {
        let Some(best) = row.iter().flatten().copied().min() else {
            continue;
        };
        for (s, t) in row.iter().enumerate() {
            let Some(t) = *t else { continue };
            let ratio = if best == 0 {
                if t == 0 {
                    1.0
                } else {
                    continue;
                }
            } else {
                t as f64 / best as f64
            };
            steps[s].push(ratio);
        }
    }
    Ok(finish(ProfileKind::Performance, input, steps))
}

/// `d_s(kappa) = |{p : t_ps <= kappa (n_p + 1)}| / |P|`.
pub fn data_profile(input: &ProfileInput) -> Result<ProfileCurves> {
    input.check()?;
    let mut steps = vec![Vec::new(); input.solvers.len()];
    for (row, &n) in input.t.iter().zip(&input.dims) {
        for (s, t) in row.iter().enumerate() {
            if let Some(t) = *t {
                steps[s].push(t as f64 / (n + 1) as f64);
            }
        }
    }
    Ok(finish(ProfileKind::Data, input, steps))
}

fn finish(kind: ProfileKind, input: &ProfileInput, mut steps: Vec<Vec<f64>>) -> ProfileCurves {
    for s in &mut steps {
        s.sort_by(f64::total_cmp);
    }
    ProfileCurves {
        kind,
        solvers: input.solvers.clone(),
        problem_count: input.problems.len(),
        steps,
    }
}

/// All traces recorded for one problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemRuns {
    pub problem: String,
    pub dim: usize,
    /// `(solver id, trace rows)`.
    pub runs: Vec<(String, Vec<TraceRow>)>,
}

/// Solve times for `metric` at `alpha_tol`, with `opt_low` taken per problem
/// as the best value reached by any solver.
pub fn profile_input(instances: &[ProblemRuns], solvers: &[String], metric: Metric, alpha_tol: f64) -> Result<ProfileInput> {
    let mut t = Vec::with_capacity(instances.len());
    for inst in instances {
        let opt_low = best_value(inst.runs.iter().map(|(_, r)| r.as_slice()), metric);
        let mut row = Vec::with_capacity(solvers.len());
        for s in solvers {
            let time = match inst.runs.iter().find(|(id, _)| id == s) {
                Some((_, rows)) if opt_low.is_finite() => solve_time(rows, metric, alpha_tol, opt_low)?,
                _ => None,
            };
            row.push(time);
        }
        t.push(row);
    }
    Ok(ProfileInput {
        solvers: solvers.to_vec(),
        problems: instances.iter().map(|i| i.problem.clone()).collect(),
        dims: instances.iter().map(|i| i.dim).collect(),
        t,
    })
}

/// One emitted profile: kind, metric, tolerance and curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    pub kind: ProfileKind,
    pub metric: Metric,
    pub alpha_tol: f64,
    pub curves: ProfileCurves,
}

impl ProfileSet {
    pub fn file_name(&self) -> String {
        format!("{}_{}_{:e}.csv", self.kind.id(), self.metric.id(), self.alpha_tol)
    }
}

/// Both profile kinds for every metric at every tolerance.
pub fn all_profiles(instances: &[ProblemRuns], solvers: &[String], tolerances: &[f64]) -> Result<Vec<ProfileSet>> {
    let mut out = Vec::new();
    for kind in [ProfileKind::Performance, ProfileKind::Data] {
        for metric in Metric::ALL {
            for &alpha_tol in tolerances {
                let input = profile_input(instances, solvers, metric, alpha_tol)?;
                let curves = match kind {
                    ProfileKind::Performance => performance_profile(&input)?,
                    ProfileKind::Data => data_profile(&input)?,
                };
                out.push(ProfileSet {
                    kind,
                    metric,
                    alpha_tol,
                    curves,
                });
            }
        }
    }
    Ok(out)
}

/// Writes one wide CSV per profile plus a long-format file combining all of
/// them. Returns the written paths in emission order.
pub fn emit_profiles(sets: &[ProfileSet], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut long = String::from("profile,metric,alpha_tol,x,solver,value\n");
    for set in sets {
        let path = dir.join(set.file_name());
        std::fs::write(&path, set.curves.to_wide_csv()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        if set.curves.problem_count == 0 {
            continue;
        }
        for x in set.curves.breakpoints() {
            for (s, name) in set.curves.solvers.iter().enumerate() {
                let _ = writeln!(
                    long,
                    "{},{},{:e},{},{},{}",
                    set.kind.id(),
                    set.metric.id(),
                    set.alpha_tol,
                    fmt_f64(x),
                    name,
                    fmt_f64(set.curves.value(s, x))
                );
            }
        }
    }
    let path = dir.join(LONG_FORMAT_FILE);
    std::fs::write(&path, long).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn input(t: Vec<Vec<Option<u64>>>, dims: Vec<usize>) -> ProfileInput {
        let s = t.first().map_or(0, |r| r.len());
        ProfileInput {
            solvers: (0..s).map(|i| format!("s{i}")).collect(),
            problems: (0..t.len()).map(|i| format!("p{i}")).collect(),
            dims,
            t,
        }
    }

    #[test]
    fn single_solver_all_solved() {
        let c = performance_profile(&input(vec![vec![Some(5)], vec![Some(9)]], vec![2, 3])).unwrap();
        assert_eq!(c.value(0, 1.0), 1.0);
    }

    #[test]
    fn hand_ratio_example() {
        let c = performance_profile(&input(vec![vec![Some(10), Some(20)]], vec![1])).unwrap();
        assert_eq!(c.value(0, 1.0), 1.0);
        assert_eq!(c.value(1, 1.0), 0.0);
        assert_eq!(c.value(1, 1.999), 0.0);
        assert_eq!(c.value(1, 2.0), 1.0);
    }

    #[test]
    fn zero_best_time() {
        let c = performance_profile(&input(vec![vec![Some(0), Some(4), Some(0), None]], vec![1])).unwrap();
        assert_eq!(c.value(0, 1.0), 1.0);
        assert_eq!(c.value(1, 1e300), 0.0);
        assert_eq!(c.value(2, 1.0), 1.0);
        assert_eq!(c.value(3, 1e300), 0.0);
    }

    #[test]
    fn data_profile_examples() {
        let c = data_profile(&input(vec![vec![Some(30)]], vec![5])).unwrap();
        assert_eq!(c.value(0, 0.0), 0.0);
        assert_eq!(c.value(0, 5.0), 1.0);
        let c = data_profile(&input(vec![vec![Some(18)]], vec![5])).unwrap();
        assert_eq!(c.value(0, 2.999), 0.0);
        assert_eq!(c.value(0, 3.0), 1.0);
    }

    #[test]
    fn empty_problem_set_is_an_error() {
        assert!(performance_profile(&input(vec![], vec![])).is_err());
        assert!(data_profile(&input(vec![], vec![])).is_err());
    }

    #[test]
    fn empty_curves_emit_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let set = ProfileSet {
            kind: ProfileKind::Data,
            metric: Metric::FMean,
            alpha_tol: 1e-3,
            curves: ProfileCurves {
                kind: ProfileKind::Data,
                solvers: vec!["a".into(), "b".into()],
                problem_count: 0,
                steps: vec![vec![], vec![]],
            },
        };
        assert_eq!(set.file_name(), "data_f_mean_1e-3.csv");
        let paths = emit_profiles(&[set], dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(&paths[0]).unwrap(), "kappa,a,b\n");
        assert_eq!(
            std::fs::read_to_string(&paths[1]).unwrap(),
            "profile,metric,alpha_tol,x,solver,value\n"
        );
    }

    fn times() -> impl Strategy<Value = Vec<Vec<Option<u64>>>> {
        proptest::collection::vec(
            proptest::collection::vec(proptest::option::of(0u64..500), 3),
            1..12,
        )
    }

    proptest! {
        #[test]
        fn profiles_monotone_and_bounded(t in times()) {
            let dims = (0..t.len()).map(|p| 1 + p % 7).collect();
            let inp = input(t, dims);
            for curves in [performance_profile(&inp).unwrap(), data_profile(&inp).unwrap()] {
                for s in 0..3 {
                    let mut prev = 0.0;
                    for x in curves.breakpoints() {
                        let v = curves.value(s, x);
                        prop_assert!((0.0..=1.0).contains(&v));
                        prop_assert!(v >= prev);
                        prev = v;
                    }
                }
            }
        }

        #[test]
        fn some_solver_attains_the_minimum(t in times()) {
            let solved = t.iter().filter(|r| r.iter().any(Option::is_some)).count();
            let p = t.len();
            let curves = performance_profile(&input(t, vec![2; p])).unwrap();
            let total: f64 = (0..3).map(|s| curves.value(s, 1.0)).sum();
            prop_assert!(total + 1e-12 >= solved as f64 / p as f64);
        }
    }
}
