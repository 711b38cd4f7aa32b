//! Tiling files: `tiling v1`, the embedded domain between `begin domain` and
//! `end domain`, then one line `a b U d` per lozenge naming its up triangle and
//! the class `d ∈ {0, 1, 2}` of the shared edge. Down-triangle lines `a b D d`
//! are accepted on input.

use std::fmt::Write as _;
use std::sync::Arc;

use super::{Tiling, TilingError};
use crate::domain::{expect_header, numbered_lines, parse_domain_body, Domain, Region};
use crate::lattice::{Dir, TriKind, Triangle};

impl Tiling {
    pub fn to_text(&self) -> String {
        let mut s = String::from("tiling v1\nbegin domain\n");
        s.push_str(&self.domain().to_text());
        s.push_str("end domain\n");
        let tris = self.domain().region().triangles();
        for l in self.lozenges() {
            let t = tris[l.up];
            writeln!(s, "{} {} U {}", t.a, t.b, l.dir.index()).unwrap();
        }
        s
    }

    /// Parses a tiling file; its embedded domain is used unless an equal
    /// `domain` is supplied to share.
    pub fn parse(text: &str, share: Option<&Arc<Domain>>) -> Result<Tiling, TilingError> {
        let mut lines = numbered_lines(text).peekable();
        expect_header(&mut lines, "tiling v1")?;
        expect_header(&mut lines, "begin domain")?;
        let mut dom_lines = Vec::new();
        let mut ended = false;
        for (n, l) in lines.by_ref() {
            if l == "end domain" {
                ended = true;
                break;
            }
            dom_lines.push((n, l));
        }
        if !ended {
            return Err(TilingError::MalformedLine {
                line: 0,
                msg: "missing `end domain`".into(),
            });
        }
        let mut dom_iter = dom_lines.into_iter();
        expect_header(&mut dom_iter, "domain v1")?;
        let (tris, centers) = parse_domain_body(dom_iter)?;
        let parsed = Domain::new(Region::new(tris)?, centers)?;
        let domain = match share {
            Some(d) if **d == parsed => d.clone(),
            _ => Arc::new(parsed),
        };
        let region = domain.region();
        let mut partner: Vec<Option<Dir>> = vec![None; region.num_triangles()];
        for (n, l) in lines {
            let bad = |msg: &str| TilingError::MalformedLine {
                line: n,
                msg: format!("{msg}: `{l}`"),
            };
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad("expected `a b U|D d`"));
            }
            let a: i32 = f[0].parse().map_err(|_| bad("bad integer"))?;
            let b: i32 = f[1].parse().map_err(|_| bad("bad integer"))?;
            let kind = match f[2] {
                "U" => TriKind::Up,
                "D" => TriKind::Down,
                _ => return Err(bad("kind must be U or D")),
            };
            let d = f[3]
                .parse::<usize>()
                .ok()
                .and_then(Dir::from_index)
                .ok_or_else(|| bad("direction must be 0, 1 or 2"))?;
            let t = Triangle { a, b, kind };
            let ti = region
                .triangle_index(&t)
                .ok_or_else(|| bad("triangle outside the domain"))?;
            let ui = region
                .triangle_index(&t.neighbor(d))
                .ok_or_else(|| bad("partner outside the domain"))?;
            for i in [ti, ui] {
                if partner[i].is_some() {
                    return Err(bad("triangle covered twice"));
                }
                partner[i] = Some(d);
            }
        }
        let partner: Option<Vec<Dir>> = partner.into_iter().collect();
        let partner =
            partner.ok_or_else(|| TilingError::NotPerfectMatching("uncovered triangle".into()))?;
        Tiling::from_partners(&domain, partner)
    }
}
