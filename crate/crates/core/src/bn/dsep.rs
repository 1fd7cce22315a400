use super::dag::Dag;
use super::BnError;

/// True when every path between `x` and `y` is blocked by `z`.
///
/// Reachability ("Bayes ball"): a trail may pass a chain or fork node only
/// when it is unobserved, and a collider only when the collider or one of
/// its descendants is in `z`.
pub fn d_separated(dag: &Dag, x: usize, y: usize, z: &[usize]) -> bool {
    let n = dag.len();
    let mut observed = vec![false; n];
    for &v in z {
        observed[v] = true;
    }
    let ancestors_of_z = dag.ancestral_set(z.iter().copied());

    // (node, arrived_from_child)
    let mut visited = vec![[false; 2]; n];
    let mut stack = vec![(x, true)];
    while let Some((v, up)) = stack.pop() {
        if visited[v][up as usize] {
            continue;
        }
        visited[v][up as usize] = true;
        if v == y && !observed[v] {
            return false;
        }
        if up && !observed[v] {
            stack.extend(dag.parents(v).iter().map(|&p| (p, true)));
            stack.extend(dag.children(v).iter().map(|&c| (c, false)));
        } else if !up {
            if !observed[v] {
                stack.extend(dag.children(v).iter().map(|&c| (c, false)));
            }
            if ancestors_of_z[v] {
                stack.extend(dag.parents(v).iter().map(|&p| (p, true)));
            }
        }
    }
    true
}

pub fn d_separated_by_name(dag: &Dag, x: &str, y: &str, z: &[&str]) -> Result<bool, BnError> {
    let xi = dag.index(x)?;
    let yi = dag.index(y)?;
    let zi = z.iter().map(|n| dag.index(n)).collect::<Result<Vec<_>, _>>()?;
    Ok(d_separated(dag, xi, yi, &zi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descendant_of_collider_opens_path() {
        let dag = Dag::from_edges(
            &[("X", 2), ("Y", 2), ("W", 2), ("D", 2)],
            &[("X", "W"), ("Y", "W"), ("W", "D")],
        )
        .unwrap();
        assert!(d_separated_by_name(&dag, "X", "Y", &[]).unwrap());
        assert!(!d_separated_by_name(&dag, "X", "Y", &["D"]).unwrap());
    }

    #[test]
    fn unknown_node() {
        let dag = Dag::from_edges(&[("X", 2)], &[]).unwrap();
        assert!(matches!(d_separated_by_name(&dag, "X", "Q", &[]), Err(BnError::UnknownNode(_))));
    }
}
