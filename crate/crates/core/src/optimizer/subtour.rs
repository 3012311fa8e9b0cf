/// Connected components of the arcs in `path_vars` that do not contain
/// vertex 0, each sorted, ordered by smallest member.
pub fn detect_subtours(path_vars: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut verts: Vec<usize> = path_vars.iter().flat_map(|&(i, j)| [i, j]).collect();
    verts.sort_unstable();
    verts.dedup();
    let idx = |v: usize| verts.binary_search(&v).expect("vertex listed");
    let mut parent: Vec<usize> = (0..verts.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in path_vars {
        let (a, b) = (find(&mut parent, idx(i)), find(&mut parent, idx(j)));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); verts.len()];
    for k in 0..verts.len() {
        let r = find(&mut parent, k);
        groups[r].push(verts[k]);
    }
    groups.into_iter().filter(|g| !g.is_empty() && !g.contains(&0)).collect()
}
