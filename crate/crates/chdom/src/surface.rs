//! Combinatorial ideal triangulations of punctured surfaces: the text format
//! parser, dual-graph 2-coloring, puncture (corner orbit) enumeration, and
//! compilation of closed dual walks into alternating turn/edge words.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SurfaceError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("dual graph is not bipartite; odd cycle through triangles {0:?}")]
    NotBipartite(Vec<usize>),
    #[error("walk is not closed")]
    NotClosed,
    #[error("walk step {step}: triangle {tri} has no free occurrence of edge e{edge}")]
    NotAdjacent { step: usize, tri: usize, edge: usize },
    #[error("walk step {step}: exit equals entry (U-turn at triangle {tri})")]
    UTurn { step: usize, tri: usize },
    #[error("puncture index {0} out of range")]
    BadPunctureIndex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// One of the three edge slots of a triangle, in counterclockwise order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub edge: usize,
    pub side: Side,
}

/// A validated ideal triangulation of S_{g,k}.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    genus: usize,
    punctures: usize,
    triangles: Vec<[Slot; 3]>,
    /// edge id -> its two (triangle, slot) occurrences, Plus side first
    edge_occ: Vec<[(usize, usize); 2]>,
    /// corner orbits around each puncture, as cyclic half-edge lists
    orbits: Vec<Vec<(usize, usize)>>,
}

impl Triangulation {
    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn punctures(&self) -> usize {
        self.punctures
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_occ.len()
    }

    pub fn triangles(&self) -> &[[Slot; 3]] {
        &self.triangles
    }

    /// The two (triangle, slot) occurrences of an edge.
    pub fn edge_occurrences(&self, edge: usize) -> [(usize, usize); 2] {
        self.edge_occ[edge]
    }

    /// The occurrence glued to the given one.
    fn mate(&self, h: (usize, usize)) -> (usize, usize) {
        let occ = self.edge_occ[self.triangles[h.0][h.1].edge];
        if occ[0] == h {
            occ[1]
        } else {
            occ[0]
        }
    }
}

/// The built-in once-punctured torus (2 triangles, 3 edges).
pub const BUILTIN_S11: &str = "\
# once-punctured torus
surface g=1 k=1
triangle 0 e0+ e1+ e2+
triangle 1 e0- e1- e2-
";

/// The built-in thrice-punctured sphere (2 triangles, 3 edges).
pub const BUILTIN_S03: &str = "\
# thrice-punctured sphere
surface g=0 k=3
triangle 0 e0+ e1+ e2+
triangle 1 e0- e2- e1-
";

fn perr(line: usize, msg: impl Into<String>) -> SurfaceError {
    SurfaceError::Parse { line, msg: msg.into() }
}

/// Parses the line-based triangulation format:
///
/// ```text
/// surface g=<int> k=<int>
/// triangle <id> <edge><side> <edge><side> <edge><side>
/// ```
///
/// `<edge>` is `e<int>`, `<side>` is `+` or `-`, slots in counterclockwise
/// order; `#` starts a comment.
pub fn parse_triangulation(text: &str) -> Result<Triangulation, SurfaceError> {
    let mut genus: Option<usize> = None;
    let mut punctures: Option<usize> = None;
    let mut tris: Vec<(usize, [Slot; 3])> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("surface") => {
                if genus.is_some() {
                    return Err(perr(lineno, "duplicate surface line"));
                }
                for tok in tokens {
                    if let Some(v) = tok.strip_prefix("g=") {
                        genus = Some(
                            v.parse().map_err(|_| perr(lineno, format!("bad genus '{tok}'")))?,
                        );
                    } else if let Some(v) = tok.strip_prefix("k=") {
                        punctures = Some(
                            v.parse()
                                .map_err(|_| perr(lineno, format!("bad puncture count '{tok}'")))?,
                        );
                    } else {
                        return Err(perr(lineno, format!("unexpected token '{tok}'")));
                    }
                }
                if genus.is_none() || punctures.is_none() {
                    return Err(perr(lineno, "surface line needs both g= and k="));
                }
            }
            Some("triangle") => {
                let id: usize = tokens
                    .next()
                    .ok_or_else(|| perr(lineno, "missing triangle id"))?
                    .parse()
                    .map_err(|_| perr(lineno, "bad triangle id"))?;
                let mut slots = [Slot { edge: 0, side: Side::Plus }; 3];
                for slot in &mut slots {
                    let tok = tokens.next().ok_or_else(|| perr(lineno, "triangle needs 3 slots"))?;
                    *slot = parse_slot(tok).ok_or_else(|| {
                        perr(lineno, format!("bad slot token '{tok}' (expected e<int>+ or e<int>-)"))
                    })?;
                }
                if tokens.next().is_some() {
                    return Err(perr(lineno, "trailing tokens after triangle slots"));
                }
                tris.push((id, slots));
            }
            Some(other) => return Err(perr(lineno, format!("unknown directive '{other}'"))),
            None => {}
        }
    }

    let genus = genus.ok_or_else(|| perr(1, "missing surface line"))?;
    let punctures = punctures.unwrap();
    build(genus, punctures, tris)
}

fn parse_slot(tok: &str) -> Option<Slot> {
    let body = tok.strip_prefix('e')?;
    let (num, side) = if let Some(n) = body.strip_suffix('+') {
        (n, Side::Plus)
    } else {
        (body.strip_suffix('-')?, Side::Minus)
    };
    Some(Slot { edge: num.parse().ok()?, side })
}

fn build(
    genus: usize,
    punctures: usize,
    tris: Vec<(usize, [Slot; 3])>,
) -> Result<Triangulation, SurfaceError> {
    let terr = |msg: String| SurfaceError::Topology(msg);
    if 2 + punctures + 2 * genus <= 4 && 2 * genus + punctures < 3 {
        // chi = 2 - 2g - k must be negative
    }
    if 2_isize - 2 * genus as isize - punctures as isize >= 0 {
        return Err(terr(format!("Euler characteristic 2-2g-k = {} is not negative", 2_isize - 2 * genus as isize - punctures as isize)));
    }
    if punctures == 0 {
        return Err(terr("at least one puncture required".into()));
    }
    let want_tris = 2 * (2 * genus + punctures - 2);
    let want_edges = 3 * (2 * genus + punctures - 2);
    if tris.len() != want_tris {
        return Err(terr(format!(
            "expected {} triangles for g={genus}, k={punctures}, found {}",
            want_tris,
            tris.len()
        )));
    }
    let mut triangles = vec![None; want_tris];
    for (id, slots) in tris {
        if id >= want_tris {
            return Err(terr(format!("triangle id {id} out of range 0..{want_tris}")));
        }
        if triangles[id].replace(slots).is_some() {
            return Err(terr(format!("duplicate triangle id {id}")));
        }
    }
    let triangles: Vec<[Slot; 3]> =
        triangles.into_iter().map(|t| t.expect("all ids present by count")).collect();

    let mut edge_occ: Vec<[Option<(usize, usize)>; 2]> = vec![[None, None]; want_edges];
    for (t, slots) in triangles.iter().enumerate() {
        for (s, slot) in slots.iter().enumerate() {
            if slot.edge >= want_edges {
                return Err(terr(format!("edge id e{} out of range 0..{want_edges}", slot.edge)));
            }
            let which = if slot.side == Side::Plus { 0 } else { 1 };
            if edge_occ[slot.edge][which].replace((t, s)).is_some() {
                return Err(terr(format!(
                    "edge e{} used more than once with side {}",
                    slot.edge,
                    if which == 0 { '+' } else { '-' }
                )));
            }
        }
    }
    let mut occ = Vec::with_capacity(want_edges);
    for (e, pair) in edge_occ.into_iter().enumerate() {
        match pair {
            [Some(p), Some(m)] => occ.push([p, m]),
            _ => return Err(terr(format!("edge e{e} must appear once with + and once with -"))),
        }
    }

    let mut tri = Triangulation { genus, punctures, triangles, edge_occ: occ, orbits: Vec::new() };
    tri.orbits = corner_orbits(&tri);
    if tri.orbits.len() != punctures {
        return Err(terr(format!(
            "gluing produces {} punctures, surface line declares {}",
            tri.orbits.len(),
            punctures
        )));
    }
    Ok(tri)
}

/// Orbits of half-edges under "rotate after crossing": each orbit walks the
/// corners around one puncture.
fn corner_orbits(tri: &Triangulation) -> Vec<Vec<(usize, usize)>> {
    let n = tri.triangles.len();
    let mut seen = vec![[false; 3]; n];
    let mut orbits = Vec::new();
    for t in 0..n {
        for s in 0..3 {
            if seen[t][s] {
                continue;
            }
            let mut orbit = Vec::new();
            let mut h = (t, s);
            loop {
                seen[h.0][h.1] = true;
                orbit.push(h);
                let m = tri.mate(h);
                h = (m.0, (m.1 + 1) % 3);
                if h == (t, s) {
                    break;
                }
            }
            orbits.push(orbit);
        }
    }
    orbits
}

/// A 2-coloring of the dual graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DualColoring {
    pub colors: Vec<u8>,
}

/// Deterministic BFS 2-coloring from triangle 0 (color 0); on failure the
/// error carries an odd dual cycle as witness.
pub fn bipartite_coloring(tri: &Triangulation) -> Result<DualColoring, SurfaceError> {
    let n = tri.num_triangles();
    let mut colors: Vec<Option<u8>> = vec![None; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut queue = VecDeque::new();
    for start in 0..n {
        if colors[start].is_some() {
            continue;
        }
        colors[start] = Some(0);
        queue.push_back(start);
        while let Some(t) = queue.pop_front() {
            let c = colors[t].unwrap();
            for slot in &tri.triangles[t] {
                let occ = tri.edge_occ[slot.edge];
                let other = if occ[0].0 == t && tri.triangles[occ[0].0][occ[0].1] == *slot {
                    occ[1].0
                } else {
                    occ[0].0
                };
                match colors[other] {
                    None => {
                        colors[other] = Some(1 - c);
                        parent[other] = Some(t);
                        queue.push_back(other);
                    }
                    Some(cc) if cc == c => {
                        return Err(SurfaceError::NotBipartite(odd_cycle_witness(
                            &parent, t, other,
                        )));
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(DualColoring { colors: colors.into_iter().map(|c| c.unwrap()).collect() })
}

fn odd_cycle_witness(parent: &[Option<usize>], u: usize, v: usize) -> Vec<usize> {
    let chain = |mut x: usize| {
        let mut path = vec![x];
        while let Some(p) = parent[x] {
            path.push(p);
            x = p;
        }
        path
    };
    let pu = chain(u);
    let pv = chain(v);
    // trim the common tail to the lowest common ancestor
    let mut i = pu.len();
    let mut j = pv.len();
    while i > 1 && j > 1 && pu[i - 2] == pv[j - 2] {
        i -= 1;
        j -= 1;
    }
    // pu[i-1] == pv[j-1] is the lowest common ancestor; list it once
    let mut cycle: Vec<usize> = pu[..i].to_vec();
    cycle.extend(pv[..j - 1].iter().rev());
    cycle
}

/// One step of a word: a turn letter E^{delta} followed by an edge crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordStep {
    pub delta: i8,
    pub edge: usize,
}

/// An alternating word t_1 e_1 ... t_r e_r describing a free homotopy class
/// on the triangulated surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    steps: Vec<WordStep>,
    peripheral: Option<usize>,
}

impl Word {
    pub fn steps(&self) -> &[WordStep] {
        &self.steps
    }

    pub fn len_letters(&self) -> usize {
        2 * self.steps.len()
    }

    /// Puncture index when this word was built as a peripheral loop.
    pub fn peripheral(&self) -> Option<usize> {
        self.peripheral
    }

    /// True when every turn letter has the same exponent (the structural
    /// signature of peripheral loops).
    pub fn constant_delta(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].delta == w[1].delta)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "t{} e{}", if s.delta > 0 { '+' } else { '-' }, s.edge)?;
        }
        Ok(())
    }
}

/// Compiles a closed dual-graph walk, given as (triangle, exit edge) pairs,
/// into an alternating word. The turn of each step is read inside the
/// blown-up triangle: +1 for a counterclockwise slot advance, -1 for a
/// clockwise one; exit through the entry slot is a forbidden U-turn.
pub fn compile_word(
    tri: &Triangulation,
    path: &[(usize, usize)],
) -> Result<Word, SurfaceError> {
    bipartite_coloring(tri)?;
    if path.is_empty() {
        return Ok(Word { steps: Vec::new(), peripheral: None });
    }
    // resolve exit occurrences first
    let mut exits: Vec<(usize, usize)> = Vec::with_capacity(path.len());
    for (i, &(t, e)) in path.iter().enumerate() {
        if t >= tri.num_triangles() || e >= tri.num_edges() {
            return Err(SurfaceError::NotAdjacent { step: i, tri: t, edge: e });
        }
        let occ = tri.edge_occ[e];
        let here: Vec<(usize, usize)> = occ.iter().copied().filter(|&(tt, _)| tt == t).collect();
        if here.is_empty() {
            return Err(SurfaceError::NotAdjacent { step: i, tri: t, edge: e });
        }
        // a self-glued edge has both occurrences in this triangle; entry
        // disambiguation happens below, keep the first occurrence for now
        exits.push(here[0]);
    }
    let n = path.len();
    let mut steps = Vec::with_capacity(n);
    for i in 0..n {
        let prev = exits[(i + n - 1) % n];
        let entry = tri.mate(prev);
        let (t, e) = path[i];
        if entry.0 != t {
            if i == 0 {
                return Err(SurfaceError::NotClosed);
            }
            return Err(SurfaceError::NotAdjacent { step: i, tri: t, edge: e });
        }
        // re-resolve the exit occurrence now that the entry slot is known
        let occ = tri.edge_occ[e];
        let exit = occ
            .iter()
            .copied()
            .find(|&h| h.0 == t && h != entry)
            .ok_or(SurfaceError::UTurn { step: i, tri: t })?;
        let diff = (exit.1 + 3 - entry.1) % 3;
        let delta = match diff {
            1 => 1i8,
            2 => -1i8,
            _ => return Err(SurfaceError::UTurn { step: i, tri: t }),
        };
        steps.push(WordStep { delta, edge: e });
    }
    Ok(Word { steps, peripheral: None })
}

/// The word of the corner-orbit loop around a puncture. All turns share the
/// same sense by construction.
pub fn peripheral_word(tri: &Triangulation, puncture: usize) -> Result<Word, SurfaceError> {
    let orbit =
        tri.orbits.get(puncture).ok_or(SurfaceError::BadPunctureIndex(puncture))?;
    let path: Vec<(usize, usize)> =
        orbit.iter().map(|&(t, s)| (t, tri.triangles[t][s].edge)).collect();
    let mut word = compile_word(tri, &path)?;
    debug_assert!(word.constant_delta());
    word.peripheral = Some(puncture);
    Ok(word)
}

/// A named closed dual walk: (name, [(triangle, exit edge), ...]).
pub type NamedWalk = (String, Vec<(usize, usize)>);

/// Parses a walks file: one `walk <name>: (<tri>,e<int>) ...` per line.
pub fn parse_walks(text: &str) -> Result<Vec<NamedWalk>, SurfaceError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let rest = line
            .strip_prefix("walk")
            .ok_or_else(|| perr(lineno, "expected 'walk <name>: ...'"))?;
        let (name, body) = rest
            .split_once(':')
            .ok_or_else(|| perr(lineno, "missing ':' after walk name"))?;
        let name = name.trim().to_string();
        if name.is_empty() {
            return Err(perr(lineno, "empty walk name"));
        }
        let mut path = Vec::new();
        for tok in body.split_whitespace() {
            let inner = tok
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| perr(lineno, format!("bad step token '{tok}'")))?;
            let (t, e) = inner
                .split_once(',')
                .ok_or_else(|| perr(lineno, format!("bad step token '{tok}'")))?;
            let t: usize =
                t.trim().parse().map_err(|_| perr(lineno, format!("bad triangle in '{tok}'")))?;
            let e: usize = e
                .trim()
                .strip_prefix('e')
                .ok_or_else(|| perr(lineno, format!("edge must be e<int> in '{tok}'")))?
                .parse()
                .map_err(|_| perr(lineno, format!("bad edge in '{tok}'")))?;
            path.push((t, e));
        }
        out.push((name, path));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_s11_counts() {
        let t = parse_triangulation(BUILTIN_S11).unwrap();
        assert_eq!(t.genus(), 1);
        assert_eq!(t.punctures(), 1);
        assert_eq!(t.num_triangles(), 2);
        assert_eq!(t.num_edges(), 3);
    }

    #[test]
    fn builtin_s03_counts() {
        let t = parse_triangulation(BUILTIN_S03).unwrap();
        assert_eq!(t.punctures(), 3);
        assert_eq!(t.num_edges(), 3);
    }

    #[test]
    fn edge_used_once_is_topology_error() {
        let bad = "surface g=1 k=1\ntriangle 0 e0+ e1+ e2+\ntriangle 1 e0- e1- e1+\n";
        match parse_triangulation(bad) {
            Err(SurfaceError::Topology(_)) => {}
            other => panic!("expected TopologyError, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let bad = "surface g=1 k=1\ntriangle 0 e0+ e1+ bogus\n";
        match parse_triangulation(bad) {
            Err(SurfaceError::Parse { line: 2, .. }) => {}
            other => panic!("expected line-2 parse error, got {other:?}"),
        }
    }

    #[test]
    fn coloring_builtins() {
        for text in [BUILTIN_S11, BUILTIN_S03] {
            let t = parse_triangulation(text).unwrap();
            let c = bipartite_coloring(&t).unwrap();
            assert_eq!(c.colors.len(), 2);
            assert_ne!(c.colors[0], c.colors[1]);
        }
    }

    #[test]
    fn uturn_rejected() {
        let t = parse_triangulation(BUILTIN_S11).unwrap();
        // cross e0 and come straight back
        let err = compile_word(&t, &[(0, 0), (1, 0)]).unwrap_err();
        assert!(matches!(err, SurfaceError::UTurn { .. }));
    }

    #[test]
    fn s11_two_step_walk() {
        let t = parse_triangulation(BUILTIN_S11).unwrap();
        let w = compile_word(&t, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(
            w.steps(),
            &[WordStep { delta: 1, edge: 1 }, WordStep { delta: -1, edge: 0 }]
        );
        // deterministic
        assert_eq!(w, compile_word(&t, &[(0, 1), (1, 0)]).unwrap());
        // alternating turns in the mirrored traversal too
        let m = compile_word(&t, &[(0, 0), (1, 1)]).unwrap();
        assert_eq!(m.steps()[0].delta, -m.steps()[1].delta);
    }

    #[test]
    fn not_closed_walk() {
        let t = parse_triangulation(BUILTIN_S03).unwrap();
        // single crossing cannot close up
        let err = compile_word(&t, &[(0, 0)]).unwrap_err();
        assert!(matches!(err, SurfaceError::NotClosed | SurfaceError::UTurn { .. }));
    }

    #[test]
    fn peripheral_s11() {
        let t = parse_triangulation(BUILTIN_S11).unwrap();
        let w = peripheral_word(&t, 0).unwrap();
        assert_eq!(w.steps().len(), 6);
        assert!(w.constant_delta());
        assert_eq!(w.peripheral(), Some(0));
        let mut counts = [0usize; 3];
        for s in w.steps() {
            counts[s.edge] += 1;
        }
        assert_eq!(counts, [2, 2, 2]);
        assert_eq!(peripheral_word(&t, 1).unwrap_err(), SurfaceError::BadPunctureIndex(1));
    }

    #[test]
    fn peripheral_s03() {
        let t = parse_triangulation(BUILTIN_S03).unwrap();
        for p in 0..3 {
            let w = peripheral_word(&t, p).unwrap();
            assert_eq!(w.steps().len(), 2);
            assert!(w.constant_delta());
        }
    }

    #[test]
    fn odd_dual_cycle_detected() {
        // boundary of a tetrahedron: sphere with 4 punctures, dual graph K4
        let text = "surface g=0 k=4\n\
            triangle 0 e3+ e5+ e4-\n\
            triangle 1 e2+ e5- e1-\n\
            triangle 2 e0+ e4+ e2-\n\
            triangle 3 e1+ e3- e0-\n";
        match parse_triangulation(text) {
            Ok(t) => match bipartite_coloring(&t) {
                Err(SurfaceError::NotBipartite(cycle)) => {
                    assert!(cycle.len() >= 3);
                    assert_eq!(cycle.len() % 2, 1);
                }
                other => panic!("expected NotBipartite, got {other:?}"),
            },
            Err(e) => panic!("triangulation should glue: {e:?}"),
        }
    }

    #[test]
    fn parse_walks_format() {
        let walks = parse_walks("# demo\nwalk a: (0,e1) (1,e0)\nwalk b: (0,e0) (1,e2)\n").unwrap();
        assert_eq!(walks.len(), 2);
        assert_eq!(walks[0], ("a".to_string(), vec![(0, 1), (1, 0)]));
    }
}
