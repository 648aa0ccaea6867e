//! Prior-similarity weight matrices over composition coordinates.
//!
//! A [`WeightMatrix`] encodes how strongly two coordinates are related;
//! attached to a [`crate::kernels::KernelSpec`] it turns every kernel family
//! into its weighted variant. Two constructions are provided: block
//! partitions ([`partition_weights`]) and phylogenetic similarity derived
//! from pairwise UniFrac distances between leaves ([`unifrac_weights`]).

mod newick;

pub use newick::parse_newick;

use crate::compdata::Composition;
use crate::error::{Error, Result};
use crate::kernels::{kernel_eval, KernelSpec};
use crate::linalg;
use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::path::Path;

/// Relative round-off allowance in the PSD check.
const PSD_TOL: f64 = 1e-8;

/// Symmetric nonnegative positive semi-definite `p x p` matrix of coordinate
/// similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    entries: DMatrix<f64>,
    min_eig: f64,
    source_path: Option<String>,
}

impl WeightMatrix {
    /// Validate and wrap a matrix: it must be square, exactly symmetric,
    /// entrywise nonnegative and PSD up to round-off.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidWeight(format!(
                "matrix is {}x{}, expected square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let p = entries.nrows();
        if p == 0 {
            return Err(Error::InvalidWeight("empty matrix".to_string()));
        }
        for i in 0..p {
            for j in 0..p {
                let v = entries[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidWeight(format!(
                        "entry ({i}, {j}) is {v}, expected finite and >= 0"
                    )));
                }
                if entries[(i, j)] != entries[(j, i)] {
                    return Err(Error::InvalidWeight(format!(
                        "entries ({i}, {j}) and ({j}, {i}) differ"
                    )));
                }
            }
        }
        let (min_eig, max_eig) = linalg::sym_extreme_eigs(&entries);
        if min_eig < -PSD_TOL * max_eig.max(1.0) {
            return Err(Error::NotPsd { min_eig });
        }
        Ok(WeightMatrix {
            entries,
            min_eig,
            source_path: None,
        })
    }

    /// Identity weights (reduces every weighted kernel to its unweighted form
    /// for the coordinate-sum families).
    pub fn identity(p: usize) -> Self {
        WeightMatrix {
            entries: DMatrix::identity(p, p),
            min_eig: 1.0,
            source_path: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        // Column-major storage plus symmetry: column i is row i, contiguous.
        let n = self.entries.nrows();
        &self.entries.as_slice()[i * n..(i + 1) * n]
    }

    /// Smallest eigenvalue found at construction.
    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    /// Path of the CSV this matrix was loaded from, when known. Used when a
    /// kernel spec carrying this matrix is serialized.
    pub fn source_path(&self) -> Option<&str> {
        self.source_path.as_deref()
    }

    pub fn with_source_path(mut self, path: String) -> Self {
        self.source_path = Some(path);
        self
    }

    /// Read a headerless `p x p` CSV.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let mut row = Vec::with_capacity(record.len());
            for (j, field) in record.iter().enumerate() {
                row.push(field.parse::<f64>().map_err(|_| Error::ParseError {
                    line: i + 1,
                    column: format!("{}", j + 1),
                    message: format!("invalid number {field:?}"),
                })?);
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::InvalidWeight("empty weight CSV".to_string()));
        }
        let p = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::InvalidWeight(format!(
                    "row {i} has {} columns, expected {p}",
                    row.len()
                )));
            }
        }
        let entries = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
        Ok(Self::new(entries)?.with_source_path(path.to_string_lossy().into_owned()))
    }

    /// Write as headerless CSV; the written path is remembered so the matrix
    /// can travel with serialized kernel specs.
    pub fn to_csv(&mut self, path: &Path) -> Result<()> {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        let p = self.dim();
        for i in 0..p {
            let row: Vec<String> = (0..p).map(|j| format!("{}", self.entries[(i, j)])).collect();
            writer.write_record(&row)?;
        }
        writer.flush()?;
        self.source_path = Some(path.to_string_lossy().into_owned());
        Ok(())
    }
}

/// Disjoint blocks covering `{0, ..., p-1}`.
#[derive(Debug, Clone)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    p: usize,
}

impl Partition {
    /// Validate blocks: nonempty, disjoint, covering `0..p`.
    pub fn new(blocks: Vec<Vec<usize>>, p: usize) -> Result<Self> {
        let mut seen = vec![false; p];
        if blocks.is_empty() {
            return Err(Error::InvalidPartition("no blocks".to_string()));
        }
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &i in block {
                if i >= p {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} out of range for p = {p}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} appears in more than one block"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidPartition(format!(
                "index {missing} not covered by any block"
            )));
        }
        Ok(Partition { blocks, p })
    }

    /// Contiguous blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let p: usize = sizes.iter().sum();
        let mut blocks = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for &s in sizes {
            blocks.push((start..start + s).collect());
            start += s;
        }
        Partition::new(blocks, p)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.p
    }
}

/// Block weights `W_{ij} = sum_l 1/|P_l| * [i, j in P_l]`: block-diagonal up
/// to permutation with value `1/|P_l|` inside block `l`, zero elsewhere. Row
/// sums are one, which keeps log-ratio weighted kernels inside the
/// block-constant log-contrast space.
pub fn partition_weights(part: &Partition) -> WeightMatrix {
    let p = part.dim();
    let mut entries = DMatrix::zeros(p, p);
    for block in part.blocks() {
        let w = 1.0 / block.len() as f64;
        for &i in block {
            for &j in block {
                entries[(i, j)] = w;
            }
        }
    }
    WeightMatrix::new(entries).expect("block weights are PSD by construction")
}

/// Internal tree-node representation (see [`parse_newick`]).
#[derive(Debug, Clone)]
pub(crate) struct TreeNode {
    pub(crate) name: Option<String>,
    pub(crate) parent: Option<usize>,
    pub(crate) branch_len: f64,
    pub(crate) children: Vec<usize>,
}

/// Rooted phylogenetic tree with named leaves mapping 1:1 onto composition
/// coordinates. Leaf order (and thus coordinate order) is the order of
/// appearance in the source text.
#[derive(Debug, Clone)]
pub struct PhyloTree {
    nodes: Vec<TreeNode>,
    root: usize,
    leaf_ids: Vec<usize>,
    by_name: BTreeMap<String, usize>,
}

impl PhyloTree {
    pub(crate) fn from_nodes(nodes: Vec<TreeNode>, root: usize) -> Result<Self> {
        let mut leaf_ids = Vec::new();
        let mut by_name = BTreeMap::new();
        for (id, node) in nodes.iter().enumerate() {
            if node.children.is_empty() {
                let name = node.name.clone().ok_or_else(|| Error::NewickParse {
                    offset: 0,
                    expected: format!("a name on leaf node {id}"),
                })?;
                if by_name.insert(name.clone(), id).is_some() {
                    return Err(Error::DuplicateLeafName(name));
                }
                leaf_ids.push(id);
            }
        }
        Ok(PhyloTree {
            nodes,
            root,
            leaf_ids,
            by_name,
        })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_ids.len()
    }

    /// Leaf names in appearance order; this is the coordinate order used by
    /// [`unifrac_weights`].
    pub fn leaf_names(&self) -> Vec<&str> {
        self.leaf_ids
            .iter()
            .map(|&id| self.nodes[id].name.as_deref().expect("leaves are named"))
            .collect()
    }

    /// Node id of a named leaf.
    pub fn leaf_id(&self, name: &str) -> Result<usize> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownLeaf(name.to_string()))
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.nodes[id].parent
    }

    pub fn branch_len(&self, id: usize) -> f64 {
        self.nodes[id].branch_len
    }

    fn depth_chain(&self, mut id: usize) -> Vec<usize> {
        let mut chain = vec![id];
        while let Some(p) = self.nodes[id].parent {
            chain.push(p);
            id = p;
        }
        chain
    }

    /// Sum of branch lengths from `id` up to (excluding) `ancestor`.
    fn len_to_ancestor(&self, mut id: usize, ancestor: usize) -> f64 {
        let mut total = 0.0;
        while id != ancestor {
            total += self.nodes[id].branch_len;
            id = self.nodes[id].parent.expect("ancestor must be above id");
        }
        total
    }
}

/// UniFrac distance between two leaves viewed as point-mass communities:
/// unshared branch length over total branch length of the union of the two
/// root-to-leaf paths. Returns 0 for identical leaves and on trees whose
/// relevant branches all have zero length.
pub fn unifrac_distance(tree: &PhyloTree, leaf_i: &str, leaf_j: &str) -> Result<f64> {
    let i = tree.leaf_id(leaf_i)?;
    let j = tree.leaf_id(leaf_j)?;
    Ok(unifrac_by_id(tree, i, j))
}

fn unifrac_by_id(tree: &PhyloTree, i: usize, j: usize) -> f64 {
    if i == j {
        return 0.0;
    }
    let chain_i = tree.depth_chain(i);
    let chain_j = tree.depth_chain(j);
    // Deepest common node of the two root-ward chains.
    let set_i: std::collections::HashSet<usize> = chain_i.iter().copied().collect();
    let lca = *chain_j
        .iter()
        .find(|id| set_i.contains(id))
        .expect("chains share the root");
    let unshared = tree.len_to_ancestor(i, lca) + tree.len_to_ancestor(j, lca);
    let shared = tree.len_to_ancestor(lca, tree.root);
    let total = shared + unshared;
    if total == 0.0 {
        0.0
    } else {
        unshared / total
    }
}

/// Which UniFrac similarity matrix to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnifracVariant {
    /// `M_{ij} = 1 - UniFrac(e_i, e_j)`. Not PSD by construction; building
    /// fails with [`Error::NotPsd`] when the check fails (fall back to `B`).
    A,
    /// `M_{ij} = sum_l UniFrac(e_i, e_l) UniFrac(e_j, e_l)`, PSD by
    /// construction.
    B,
}

/// Build the UniFrac weight matrix `D M D` with `D = diag(1/sqrt(M_ii))`, so
/// the result has unit diagonal. Coordinates follow the tree's leaf order.
pub fn unifrac_weights(tree: &PhyloTree, variant: UnifracVariant) -> Result<WeightMatrix> {
    let p = tree.n_leaves();
    if p < 2 {
        return Err(Error::InvalidWeight(format!(
            "need at least 2 leaves, got {p}"
        )));
    }
    let mut dist = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in (a + 1)..p {
            let d = unifrac_by_id(tree, tree.leaf_ids[a], tree.leaf_ids[b]);
            dist[(a, b)] = d;
            dist[(b, a)] = d;
        }
    }
    let m = match variant {
        UnifracVariant::A => DMatrix::from_fn(p, p, |i, j| 1.0 - dist[(i, j)]),
        UnifracVariant::B => &dist * dist.transpose(),
    };
    let mut scale = Vec::with_capacity(p);
    for i in 0..p {
        let d = m[(i, i)];
        if d <= 0.0 {
            return Err(Error::InvalidWeight(format!(
                "similarity diagonal entry {i} is {d}; tree has no usable branch length"
            )));
        }
        scale.push(1.0 / d.sqrt());
    }
    let mut w = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            w[(i, j)] = scale[i] * m[(i, j)] * scale[j];
        }
    }
    // Exact symmetry despite float scaling.
    for i in 0..p {
        for j in (i + 1)..p {
            let v = w[(i, j)];
            w[(j, i)] = v;
        }
    }
    WeightMatrix::new(w)
}

/// Evaluate the weighted variant of `spec`'s family under `weight`.
///
/// With identity weights this agrees with the unweighted kernel: exactly for
/// the coordinate-sum families (linear, generalized-JS, Hilbertian) and the
/// log-ratio kernel, and up to the collapsed double sum for the exponential
/// families.
pub fn weighted_kernel_eval(
    spec: &KernelSpec,
    weight: &WeightMatrix,
    x: &Composition,
    y: &Composition,
) -> Result<f64> {
    let weighted = spec.clone().with_weight(weight.clone());
    kernel_eval(&weighted, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{gram, KernelSpec};
    use crate::rng::CounterRng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn partition_weights_identity_for_singletons() {
        let part = Partition::contiguous(&[1, 1, 1]).unwrap();
        let w = partition_weights(&part);
        assert_eq!(w.entries(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn partition_weights_single_block() {
        let part = Partition::contiguous(&[4]).unwrap();
        let w = partition_weights(&part);
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(w.entries()[(i, j)], 0.25);
            }
        }
    }

    #[test]
    fn partition_row_sums_are_one() {
        let mut rng = CounterRng::new(9);
        for _ in 0..10 {
            let p = 3 + rng.next_below(8);
            let mut sizes = Vec::new();
            let mut left = p;
            while left > 0 {
                let s = 1 + rng.next_below(left);
                sizes.push(s);
                left -= s;
            }
            let w = partition_weights(&Partition::contiguous(&sizes).unwrap());
            for i in 0..p {
                let sum: f64 = (0..p).map(|j| w.entries()[(i, j)]).sum();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![vec![0, 1], vec![1, 2]], 3).is_err());
        assert!(Partition::new(vec![vec![0, 1]], 3).is_err());
        assert!(Partition::new(vec![vec![0], vec![]], 1).is_err());
    }

    #[test]
    fn unifrac_hand_computed_trees() {
        let tree = parse_newick("(A:1,B:1);").unwrap();
        assert_abs_diff_eq!(unifrac_distance(&tree, "A", "B").unwrap(), 1.0);
        assert_abs_diff_eq!(unifrac_distance(&tree, "A", "A").unwrap(), 0.0);

        let tree2 = parse_newick("((A:1,B:1):1,C:2);").unwrap();
        assert_abs_diff_eq!(
            unifrac_distance(&tree2, "A", "B").unwrap(),
            2.0 / 3.0,
            epsilon = 1e-15
        );
        assert!(unifrac_distance(&tree2, "A", "Z").is_err());
    }

    #[test]
    fn unifrac_symmetric_and_bounded() {
        let tree = parse_newick("(((A:0.3,B:0.9):0.2,C:1.5):0.4,(D:0.7,E:0.1):0.8);").unwrap();
        let names = ["A", "B", "C", "D", "E"];
        for a in names {
            for b in names {
                let d1 = unifrac_distance(&tree, a, b).unwrap();
                let d2 = unifrac_distance(&tree, b, a).unwrap();
                assert_eq!(d1, d2);
                assert!((0.0..=1.0).contains(&d1));
            }
        }
    }

    #[test]
    fn unifrac_weights_star_tree() {
        let tree = parse_newick("(A:1,B:1,C:1);").unwrap();
        let w = unifrac_weights(&tree, UnifracVariant::A).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(w.entries()[(i, i)], 1.0, epsilon = 1e-12);
        }
        let off = w.entries()[(0, 1)];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_abs_diff_eq!(w.entries()[(i, j)], off, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn unifrac_weights_unit_diagonal_both_variants() {
        let tree = parse_newick("((A:0.5,B:1.5):1,(C:2,D:0.25):0.5);").unwrap();
        for variant in [UnifracVariant::A, UnifracVariant::B] {
            let w = unifrac_weights(&tree, variant).unwrap();
            for i in 0..4 {
                assert_abs_diff_eq!(w.entries()[(i, i)], 1.0, epsilon = 1e-12);
            }
        }
    }

    fn random_tree(rng: &mut CounterRng, n_leaves: usize) -> PhyloTree {
        // Random recursive bifurcation with random branch lengths.
        fn build(rng: &mut CounterRng, labels: &[usize], out: &mut String) {
            if labels.len() == 1 {
                out.push_str(&format!("L{}:{:.4}", labels[0], 0.05 + rng.next_f64()));
                return;
            }
            let cut = 1 + rng.next_below(labels.len() - 1);
            out.push('(');
            build(rng, &labels[..cut], out);
            out.push(',');
            build(rng, &labels[cut..], out);
            out.push_str(&format!("):{:.4}", 0.05 + rng.next_f64()));
        }
        let labels: Vec<usize> = (0..n_leaves).collect();
        let mut text = String::new();
        build(rng, &labels, &mut text);
        text.push(';');
        parse_newick(&text).unwrap()
    }

    #[test]
    fn variant_b_is_psd_on_random_trees() {
        let mut rng = CounterRng::new(77);
        for _ in 0..20 {
            let p = 3 + rng.next_below(10);
            let tree = random_tree(&mut rng, p);
            let w = unifrac_weights(&tree, UnifracVariant::B).unwrap();
            assert!(w.min_eig() >= -1e-8, "min eig {}", w.min_eig());
        }
    }

    #[test]
    fn identity_weight_reduces_to_unweighted() {
        let mut rng = CounterRng::new(81);
        let p = 5;
        let eye = WeightMatrix::identity(p);
        let specs = [
            KernelSpec::linear(),
            KernelSpec::generalized_js(1.0, 0.5).unwrap(),
            KernelSpec::generalized_js(f64::INFINITY, 1.0).unwrap(),
            KernelSpec::generalized_js(10.0, 10.0).unwrap(),
            KernelSpec::hilbertian(1.0, -1.0).unwrap(),
            KernelSpec::hilbertian(1.0, f64::NEG_INFINITY).unwrap(),
            KernelSpec::aitchison(1e-3).unwrap(),
        ];
        for _ in 0..50 {
            let x = crate::testutil::random_composition(&mut rng, p, true);
            let y = crate::testutil::random_composition(&mut rng, p, true);
            for spec in &specs {
                let kw = weighted_kernel_eval(spec, &eye, &x, &y).unwrap();
                let k = kernel_eval(spec, &x, &y).unwrap();
                assert_abs_diff_eq!(kw, k, epsilon = 1e-12);
            }
            // The exponential families collapse too.
            for spec in [
                KernelSpec::rbf(0.4).unwrap(),
                KernelSpec::aitchison_rbf(1e-3, 1.5).unwrap(),
                KernelSpec::heat_diffusion(0.05).unwrap(),
            ] {
                let kw = weighted_kernel_eval(&spec, &eye, &x, &y).unwrap();
                let k = kernel_eval(&spec, &x, &y).unwrap();
                assert_abs_diff_eq!(kw, k, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn weighted_eval_symmetric_in_arguments() {
        let mut rng = CounterRng::new(85);
        let tree = random_tree(&mut rng, 5);
        let w = unifrac_weights(&tree, UnifracVariant::B).unwrap();
        let specs = [
            KernelSpec::linear(),
            KernelSpec::generalized_js(10.0, 0.5).unwrap(),
            KernelSpec::hilbertian(10.0, f64::NEG_INFINITY).unwrap(),
            KernelSpec::aitchison(1e-4).unwrap(),
            KernelSpec::heat_diffusion(0.05).unwrap(),
        ];
        for _ in 0..30 {
            let x = crate::testutil::random_composition(&mut rng, 5, true);
            let y = crate::testutil::random_composition(&mut rng, 5, true);
            for spec in &specs {
                let kxy = weighted_kernel_eval(spec, &w, &x, &y).unwrap();
                let kyx = weighted_kernel_eval(spec, &w, &y, &x).unwrap();
                assert_abs_diff_eq!(kxy, kyx, epsilon = 1e-12 * kxy.abs().max(1.0));
            }
        }
    }

    #[test]
    fn weighted_linear_matches_double_loop_oracle() {
        let mut rng = CounterRng::new(83);
        let p = 4;
        let part = Partition::contiguous(&[2, 2]).unwrap();
        let w = partition_weights(&part);
        let spec = KernelSpec::linear();
        for _ in 0..20 {
            let x = crate::testutil::random_composition(&mut rng, p, false);
            let y = crate::testutil::random_composition(&mut rng, p, false);
            let got = weighted_kernel_eval(&spec, &w, &x, &y).unwrap();
            let q = 1.0 / p as f64;
            let mut expect = 0.0;
            for j in 0..p {
                for l in 0..p {
                    expect += w.entries()[(j, l)]
                        * (x.get(j) * y.get(l) - x.get(j) * q - y.get(l) * q + q * q);
                }
            }
            assert_abs_diff_eq!(got, expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn weighted_gram_psd_for_proven_families() {
        let mut rng = CounterRng::new(91);
        let p = 6;
        let rows: Vec<Composition> = (0..30)
            .map(|_| crate::testutil::random_composition(&mut rng, p, true))
            .collect();
        let tree = random_tree(&mut rng, p);
        // Rename leaves so coordinates align by appearance order.
        let w_unifrac = unifrac_weights(&tree, UnifracVariant::B).unwrap();
        let w_part = partition_weights(&Partition::contiguous(&[2, 3, 1]).unwrap());
        let specs = [
            KernelSpec::linear(),
            KernelSpec::generalized_js(1.0, 0.5).unwrap(),
            KernelSpec::hilbertian(1.0, -1.0).unwrap(),
            KernelSpec::aitchison(1e-3).unwrap(),
            KernelSpec::rbf(0.5).unwrap(),
        ];
        for w in [w_unifrac, w_part] {
            for spec in &specs {
                let weighted = spec.clone().with_weight(w.clone());
                let g = gram(&weighted, &rows).unwrap();
                assert!(
                    g.min_eig_estimate() >= -1e-8 * g.max_eig_estimate().max(1.0),
                    "{} weighted: min eig {}",
                    spec.describe(),
                    g.min_eig_estimate()
                );
            }
        }
    }

    #[test]
    fn weight_csv_round_trip() {
        let dir = std::env::temp_dir().join("compkern_wtest");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("w.csv");
        let part = Partition::contiguous(&[2, 1]).unwrap();
        let mut w = partition_weights(&part);
        w.to_csv(&path).unwrap();
        let back = WeightMatrix::from_csv(&path).unwrap();
        assert_eq!(w.entries(), back.entries());
        assert_eq!(back.source_path().unwrap(), path.to_string_lossy());
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(WeightMatrix::new(m).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, -0.1, -0.1, 1.0]);
        assert!(WeightMatrix::new(neg).is_err());
    }
}
