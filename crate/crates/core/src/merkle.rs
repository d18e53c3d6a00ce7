//! Keyed hashing and the two-level Merkle tree over a tableau.
//!
//! The lower level hashes each row's `B` blocks into a row root; the upper
//! level hashes the `T` row roots into the root `r`. Together they form one
//! binary tree of depth `D = log T + log B` whose node addresses are bit
//! strings read from the root: `0` is the left child, `1` the right child.
//! A depth-`D` address names the leaf `r_ij`; appending one more `0` names
//! the data block `b_ij` itself.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Sha256, Sha512_256};
use thiserror::Error;

use crate::machine::{Dims, Row, Trace};

pub const DIGEST_LEN: usize = 32;
const LEAF_TAG: u8 = 0x00;
const NODE_TAG: u8 = 0x01;
/// Bytes per cost unit of hashing input.
pub const HASH_UNIT_BYTES: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MerkleError {
    #[error("coordinates or address outside the {rows}x{blocks} grid")]
    OutOfRange { rows: u32, blocks: u32 },
    #[error("rows differ outside the update window at block {block}")]
    DivergesOutsideWindow { block: u32 },
    #[error("path bundle does not cover the requested path")]
    IncompleteBundle,
    #[error("security parameter must be at least 16")]
    WeakParameter,
    #[error("unknown hash algorithm `{0}`")]
    UnknownAlgorithm(String),
}

/// A 256-bit digest, hex encoded on the wire.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub const ZERO: Digest = Digest([0; DIGEST_LEN]);

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Same digest with one bit flipped.
    pub fn flip_bit(mut self, bit: usize) -> Self {
        self.0[(bit / 8) % DIGEST_LEN] ^= 1 << (bit % 8);
        self
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Digest {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; DIGEST_LEN];
        hex::decode_to_slice(s, &mut out)?;
        Ok(Digest(out))
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HashAlgorithm {
    #[default]
    Sha256,
    #[serde(rename = "sha512-256")]
    Sha512_256,
}

impl HashAlgorithm {
    pub fn id(&self) -> &'static str {
        match self {
            HashAlgorithm::Sha256 => "sha256",
            HashAlgorithm::Sha512_256 => "sha512-256",
        }
    }
}

impl FromStr for HashAlgorithm {
    type Err = MerkleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sha256" => Ok(HashAlgorithm::Sha256),
            "sha512-256" | "sha512/256" => Ok(HashAlgorithm::Sha512_256),
            other => Err(MerkleError::UnknownAlgorithm(other.into())),
        }
    }
}

/// Receives one event per hash evaluation, sized in 64-byte input units.
pub trait HashMeter {
    fn on_hash(&mut self, units: u64);
}

impl HashMeter for () {
    fn on_hash(&mut self, _units: u64) {}
}

/// Plain call/unit counter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashCounter {
    pub calls: u64,
    pub units: u64,
}

impl HashMeter for HashCounter {
    fn on_hash(&mut self, units: u64) {
        self.calls += 1;
        self.units += units;
    }
}

/// Cost units of hashing `len` payload bytes.
pub fn hash_units(len: usize) -> u64 {
    len.div_ceil(HASH_UNIT_BYTES).max(1) as u64
}

/// Keyed hash `H_k(x) = hash(k ‖ x)`.
#[derive(Clone, PartialEq, Eq)]
pub struct HashScheme {
    algorithm: HashAlgorithm,
    key: [u8; 32],
    n: u32,
}

impl fmt::Debug for HashScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HashScheme")
            .field("algorithm", &self.algorithm)
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

/// Samples a fresh key for security parameter `n` from a seeded ChaCha20 stream.
pub fn gen_key(n: u32, seed: u64, algorithm: HashAlgorithm) -> Result<HashScheme, MerkleError> {
    gen_key_stream(n, seed, 0, algorithm)
}

/// As [`gen_key`], drawing from stream `stream` of the seed (one per trial).
pub fn gen_key_stream(
    n: u32,
    seed: u64,
    stream: u64,
    algorithm: HashAlgorithm,
) -> Result<HashScheme, MerkleError> {
    if n < 16 {
        return Err(MerkleError::WeakParameter);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut key = [0u8; 32];
    rng.fill_bytes(&mut key);
    Ok(HashScheme { algorithm, key, n })
}

impl HashScheme {
    pub fn from_key(algorithm: HashAlgorithm, key: [u8; 32], n: u32) -> Self {
        Self { algorithm, key, n }
    }

    pub fn algorithm(&self) -> HashAlgorithm {
        self.algorithm
    }

    pub fn key(&self) -> &[u8; 32] {
        &self.key
    }

    pub fn security_parameter(&self) -> u32 {
        self.n
    }

    pub fn digest_bits(&self) -> u32 {
        8 * DIGEST_LEN as u32
    }

    fn keyed(&self, tag: u8, parts: &[&[u8]]) -> Digest {
        fn run<H: sha2::Digest>(key: &[u8], tag: u8, parts: &[&[u8]]) -> Digest {
            let mut h = H::new();
            h.update(key);
            h.update([tag]);
            for p in parts {
                h.update(p);
            }
            let mut out = [0u8; DIGEST_LEN];
            out.copy_from_slice(&h.finalize()[..DIGEST_LEN]);
            Digest(out)
        }
        match self.algorithm {
            HashAlgorithm::Sha256 => run::<Sha256>(&self.key, tag, parts),
            HashAlgorithm::Sha512_256 => run::<Sha512_256>(&self.key, tag, parts),
        }
    }

    /// `H(0x00 ‖ block)`.
    pub fn leaf_hash(&self, block: &[u8], meter: &mut impl HashMeter) -> Digest {
        meter.on_hash(hash_units(block.len()));
        self.keyed(LEAF_TAG, &[block])
    }

    /// `H(0x01 ‖ left ‖ right)`.
    pub fn node_hash(&self, left: &Digest, right: &Digest, meter: &mut impl HashMeter) -> Digest {
        meter.on_hash(hash_units(2 * DIGEST_LEN));
        self.keyed(NODE_TAG, &[&left.0, &right.0])
    }
}

/// A node of the tableau tree, as a bit string read from the root.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodeAddress {
    bits: u64,
    len: u8,
}

impl NodeAddress {
    pub const ROOT: NodeAddress = NodeAddress { bits: 0, len: 0 };

    /// Address from the low `len` bits of `bits`, most significant first.
    pub fn from_bits(bits: u64, len: u32) -> Self {
        assert!(len < 64);
        Self {
            bits: bits & ((1u64 << len) - 1),
            len: len as u8,
        }
    }

    pub fn len(&self) -> u32 {
        self.len as u32
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    /// The address as an integer (its bits, most significant first).
    pub fn value(&self) -> u64 {
        self.bits
    }

    pub fn child(&self, bit: bool) -> Self {
        Self::from_bits((self.bits << 1) | bit as u64, self.len() + 1)
    }

    pub fn left(&self) -> Self {
        self.child(false)
    }

    pub fn right(&self) -> Self {
        self.child(true)
    }

    pub fn parent(&self) -> Option<Self> {
        (self.len > 0).then(|| Self::from_bits(self.bits >> 1, self.len() - 1))
    }

    /// Bit `k` (0 = first step from the root).
    pub fn bit(&self, k: u32) -> bool {
        debug_assert!(k < self.len());
        (self.bits >> (self.len() - 1 - k)) & 1 == 1
    }

    /// Prefix of length `len`.
    pub fn prefix(&self, len: u32) -> Self {
        debug_assert!(len <= self.len());
        Self::from_bits(self.bits >> (self.len() - len), len)
    }

    pub fn is_ancestor_of(&self, other: &NodeAddress) -> bool {
        self.len <= other.len && other.prefix(self.len()) == *self
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.len() {
            f.write_str(if self.bit(k) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeAddress(\"{self}\")")
    }
}

impl FromStr for NodeAddress {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        if s.len() >= 64 {
            return Err(());
        }
        let mut addr = NodeAddress::ROOT;
        for c in s.chars() {
            addr = match c {
                '0' => addr.left(),
                '1' => addr.right(),
                _ => return Err(()),
            };
        }
        Ok(addr)
    }
}

impl Serialize for NodeAddress {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeAddress {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse()
            .map_err(|_| serde::de::Error::custom("node address must be a bit string"))
    }
}

/// Address arithmetic for one tableau shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    dims: Dims,
}

impl Grid {
    pub fn new(dims: Dims) -> Self {
        Self { dims }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// `D = log T + log B`, the depth of the leaves `r_ij`.
    pub fn depth(&self) -> u32 {
        self.dims.log_rows() + self.dims.log_blocks()
    }

    fn out_of_range(&self) -> MerkleError {
        MerkleError::OutOfRange {
            rows: self.dims.rows,
            blocks: self.dims.blocks(),
        }
    }

    /// Leaf address of `r_ij` (1-based coordinates).
    pub fn address_of(&self, i: u32, j: u32) -> Result<NodeAddress, MerkleError> {
        if i == 0 || i > self.dims.rows || j == 0 || j > self.dims.blocks() {
            return Err(self.out_of_range());
        }
        let bits = (((i - 1) as u64) << self.dims.log_blocks()) | (j - 1) as u64;
        Ok(NodeAddress::from_bits(bits, self.depth()))
    }

    /// Address of the data block `b_ij`.
    pub fn block_address(&self, i: u32, j: u32) -> Result<NodeAddress, MerkleError> {
        Ok(self.address_of(i, j)?.left())
    }

    /// Inverse of [`Grid::address_of`].
    pub fn coords_of(&self, addr: &NodeAddress) -> Result<(u32, u32), MerkleError> {
        if addr.len() != self.depth() {
            return Err(self.out_of_range());
        }
        let lb = self.dims.log_blocks();
        let i = (addr.value() >> lb) as u32 + 1;
        let j = (addr.value() & ((1u64 << lb) - 1)) as u32 + 1;
        Ok((i, j))
    }

    /// Address of the row root `r_i`.
    pub fn row_address(&self, i: u32) -> Result<NodeAddress, MerkleError> {
        if i == 0 || i > self.dims.rows {
            return Err(self.out_of_range());
        }
        Ok(NodeAddress::from_bits((i - 1) as u64, self.dims.log_rows()))
    }
}

/// Merkle tree over one row's blocks in heap layout: node 0 is the row root,
/// the children of node `k` are `2k+1` and `2k+2`, leaves start at `B-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowTree {
    nodes: Vec<Digest>,
}

impl RowTree {
    pub fn build(scheme: &HashScheme, row: &Row, lambda: u32, meter: &mut impl HashMeter) -> Self {
        let blocks = row.cells().len() / lambda as usize;
        debug_assert!(blocks.is_power_of_two());
        let mut nodes = vec![Digest::ZERO; 2 * blocks - 1];
        for j in 0..blocks {
            nodes[blocks - 1 + j] = scheme.leaf_hash(&row.block_bytes(j as u32 + 1, lambda), meter);
        }
        for k in (0..blocks - 1).rev() {
            nodes[k] = scheme.node_hash(&nodes[2 * k + 1], &nodes[2 * k + 2], meter);
        }
        Self { nodes }
    }

    pub fn blocks(&self) -> u32 {
        self.nodes.len().div_ceil(2) as u32
    }

    pub fn root(&self) -> Digest {
        self.nodes[0]
    }

    pub fn leaf(&self, j: u32) -> Digest {
        self.nodes[self.blocks() as usize - 2 + j as usize]
    }

    /// Node at `bits` below the row root (`len ≤ log B`).
    pub fn node(&self, bits: u64, len: u32) -> Digest {
        self.nodes[((1usize << len) - 1) + bits as usize]
    }

    /// Replaces block `j` and rehashes its leaf-to-root path:
    /// one leaf hash plus `log B` node hashes.
    pub fn update_block(
        &mut self,
        scheme: &HashScheme,
        j: u32,
        block: &[u8],
        meter: &mut impl HashMeter,
    ) {
        let mut k = self.blocks() as usize - 2 + j as usize;
        self.nodes[k] = scheme.leaf_hash(block, meter);
        while k > 0 {
            k = (k - 1) / 2;
            self.nodes[k] = scheme.node_hash(&self.nodes[2 * k + 1], &self.nodes[2 * k + 2], meter);
        }
    }
}

/// Updates `prev` (the tree of `prev_row`) to the tree of `next_row`,
/// rehashing only changed blocks, all of which must lie in `window`.
/// Blocks are compared before any hashing; an unchanged row costs nothing.
pub fn incremental_row_root(
    scheme: &HashScheme,
    prev: &RowTree,
    prev_row: &Row,
    next_row: &Row,
    window: core::ops::RangeInclusive<u32>,
    lambda: u32,
    meter: &mut impl HashMeter,
) -> Result<RowTree, MerkleError> {
    let changed = changed_blocks(prev_row, next_row, lambda);
    if let Some(&j) = changed.iter().find(|j| !window.contains(j)) {
        return Err(MerkleError::DivergesOutsideWindow { block: j });
    }
    let mut tree = prev.clone();
    for j in changed {
        tree.update_block(scheme, j, &next_row.block_bytes(j, lambda), meter);
    }
    Ok(tree)
}

/// 1-based indices of blocks that differ between two rows.
pub fn changed_blocks(a: &Row, b: &Row, lambda: u32) -> Vec<u32> {
    let blocks = (a.cells().len() / lambda as usize) as u32;
    (1..=blocks)
        .filter(|&j| a.block(j, lambda) != b.block(j, lambda))
        .collect()
}

/// Builds the upper tree (heap layout, `2T-1` nodes) over `T` row roots.
fn build_upper(scheme: &HashScheme, leaves: &[Digest], meter: &mut impl HashMeter) -> Vec<Digest> {
    let t = leaves.len();
    let mut nodes = vec![Digest::ZERO; 2 * t - 1];
    nodes[t - 1..].copy_from_slice(leaves);
    for k in (0..t - 1).rev() {
        nodes[k] = scheme.node_hash(&nodes[2 * k + 1], &nodes[2 * k + 2], meter);
    }
    nodes
}

/// Root and row roots of a tableau tree. Nodes below a row root are rebuilt
/// on demand from the rows (see [`TreeReader`]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableauTree {
    dims: Dims,
    row_roots: Vec<Digest>,
    blank_root: Digest,
    upper: Vec<Digest>,
}

impl TableauTree {
    /// Batch build: every stored row hashed from scratch, the blank row once.
    pub fn build(scheme: &HashScheme, trace: &Trace, meter: &mut impl HashMeter) -> Self {
        let dims = trace.dims();
        let row_roots = trace
            .rows()
            .iter()
            .map(|row| RowTree::build(scheme, row, dims.lambda, meter).root())
            .collect();
        let blank_root = RowTree::build(scheme, trace.blank_row(), dims.lambda, meter).root();
        Self::assemble(scheme, dims, row_roots, blank_root, meter)
    }

    /// Upper tree over the given row roots; rows past `row_roots` use `blank_root`.
    pub fn assemble(
        scheme: &HashScheme,
        dims: Dims,
        row_roots: Vec<Digest>,
        blank_root: Digest,
        meter: &mut impl HashMeter,
    ) -> Self {
        let mut leaves = row_roots.clone();
        leaves.resize(dims.rows as usize, blank_root);
        let upper = build_upper(scheme, &leaves, meter);
        Self {
            dims,
            row_roots,
            blank_root,
            upper,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn root(&self) -> Digest {
        self.upper[0]
    }

    /// `r_i` for 1-based `i`.
    pub fn row_root(&self, i: u32) -> Digest {
        self.row_roots
            .get(i as usize - 1)
            .copied()
            .unwrap_or(self.blank_root)
    }

    pub fn blank_root(&self) -> Digest {
        self.blank_root
    }

    /// Node in the upper tree (`addr.len() ≤ log T`).
    pub fn upper_node(&self, addr: &NodeAddress) -> Digest {
        debug_assert!(addr.len() <= self.dims.log_rows());
        self.upper[((1usize << addr.len()) - 1) + addr.value() as usize]
    }
}

/// Row subtree cache for on-demand node lookups below the row roots.
#[derive(Clone, Debug, Default)]
pub struct RowCache(Option<(u32, RowTree)>);

impl RowCache {
    /// Value of any node with `addr.len() ≤ D`; rebuilds the row subtree from
    /// the trace (unmetered) when the address lies below a row root.
    pub fn node(
        &mut self,
        scheme: &HashScheme,
        trace: &Trace,
        tree: &TableauTree,
        addr: &NodeAddress,
    ) -> Digest {
        let dims = trace.dims();
        let lt = dims.log_rows();
        if addr.len() <= lt {
            return tree.upper_node(addr);
        }
        let below = addr.len() - lt;
        let i = (addr.value() >> below) as u32 + 1;
        let bits = addr.value() & ((1u64 << below) - 1);
        if !matches!(&self.0, Some((k, _)) if *k == i) {
            let t = RowTree::build(scheme, trace.row(i), dims.lambda, &mut ());
            self.0 = Some((i, t));
        }
        self.0.as_ref().expect("filled").1.node(bits, below)
    }
}

/// Reads arbitrary nodes of a tableau tree, rebuilding row subtrees from the
/// trace on demand.
#[derive(Debug)]
pub struct TreeReader<'a> {
    scheme: &'a HashScheme,
    trace: &'a Trace,
    tree: &'a TableauTree,
    cache: RowCache,
}

impl<'a> TreeReader<'a> {
    pub fn new(scheme: &'a HashScheme, trace: &'a Trace, tree: &'a TableauTree) -> Self {
        Self {
            scheme,
            trace,
            tree,
            cache: RowCache::default(),
        }
    }

    pub fn trace(&self) -> &'a Trace {
        self.trace
    }

    pub fn tree(&self) -> &'a TableauTree {
        self.tree
    }

    pub fn node(&mut self, addr: &NodeAddress) -> Digest {
        self.cache.node(self.scheme, self.trace, self.tree, addr)
    }

    pub fn children(&mut self, addr: &NodeAddress) -> (Digest, Digest) {
        (self.node(&addr.left()), self.node(&addr.right()))
    }

    pub fn block(&self, i: u32, j: u32) -> Vec<u8> {
        self.trace.block_bytes(i, j)
    }

    /// Bundle for the path `u → v`; `v` may be a node or a block address.
    pub fn path_bundle(
        &mut self,
        u: &NodeAddress,
        v: &NodeAddress,
    ) -> Result<PathBundle, MerkleError> {
        let grid = Grid::new(self.trace.dims());
        let depth = grid.depth();
        if !u.is_ancestor_of(v) || v.len() > depth + 1 || u.len() > depth {
            return Err(MerkleError::IncompleteBundle);
        }
        let last = v.len().min(depth);
        let mut links = Vec::new();
        for len in u.len()..=last {
            let w = v.prefix(len);
            if len < depth {
                let (l, r) = self.children(&w);
                links.push(Link::Node(l, r));
            } else {
                let (i, j) = grid.coords_of(&w)?;
                links.push(Link::Block(self.block(i, j)));
            }
        }
        Ok(PathBundle {
            top: self.node(u),
            links,
        })
    }
}

/// The children (or data block) of one node on a path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Node(Digest, Digest),
    Block(#[serde(with = "hex_bytes")] Vec<u8>),
}

/// Values needed to check a path `u → v`: the value of `u` and, for every
/// node `w` on the path down to `v` (or to the leaf above `v` when `v` is a
/// block), the children of `w` or, at leaf depth, its data block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathBundle {
    pub top: Digest,
    pub links: Vec<Link>,
}

/// Checks every hash relation on the path `u → v` in the tree of depth
/// `depth`. Costs one hash per link.
pub fn check_consistent_path(
    scheme: &HashScheme,
    bundle: &PathBundle,
    u: &NodeAddress,
    v: &NodeAddress,
    depth: u32,
    meter: &mut impl HashMeter,
) -> Result<bool, MerkleError> {
    if !u.is_ancestor_of(v) || v.len() > depth + 1 || u.len() > depth {
        return Err(MerkleError::IncompleteBundle);
    }
    let last = v.len().min(depth);
    if bundle.links.len() != (last - u.len() + 1) as usize {
        return Err(MerkleError::IncompleteBundle);
    }
    let mut current = bundle.top;
    for (k, link) in bundle.links.iter().enumerate() {
        let len = u.len() + k as u32;
        match (link, len < depth) {
            (Link::Node(l, r), true) => {
                if scheme.node_hash(l, r, meter) != current {
                    return Ok(false);
                }
                if len < v.len() {
                    current = if v.bit(len) { *r } else { *l };
                }
            }
            (Link::Block(bytes), false) => {
                if scheme.leaf_hash(bytes, meter) != current {
                    return Ok(false);
                }
            }
            _ => return Err(MerkleError::IncompleteBundle),
        }
    }
    Ok(true)
}

pub(crate) mod hex_bytes {
    use alloc::string::String;
    use alloc::vec::Vec;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}
