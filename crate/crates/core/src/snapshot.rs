//! Versioned binary snapshot of a frozen network.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "HINSNAP\0"
//! version    u32      1
//! groups     u32      count, then per group:
//!              str name, u32 label count, str label...
//! relations  u32      count, then per relation:
//!              str name, u32 source group, u32 target group,
//!              u64 edge count,
//!              u64 offsets[source size + 1]   (CSR row starts)
//!              u32 targets[edge count]
//!              u8  has payload, i32 payload[edge count] if 1
//! str        u32 byte length, UTF-8 bytes
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::hin::{build_hin, Hin, LinkGroup, ObjectGroup};

pub const MAGIC: &[u8; 8] = b"HINSNAP\0";
pub const VERSION: u32 = 1;

struct Out<W: Write> {
    w: W,
}

impl<W: Write> Out<W> {
    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.w.write_all(b).map_err(|e| Error::io("<snapshot>", e))
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn str(&mut self, s: &str) -> Result<()> {
        self.u32(s.len() as u32)?;
        self.bytes(s.as_bytes())
    }
}

pub fn write_snapshot<W: Write>(hin: &Hin, w: W) -> Result<()> {
    let mut out = Out { w };
    out.bytes(MAGIC)?;
    out.u32(VERSION)?;
    let groups: Vec<&ObjectGroup> = hin.groups().collect();
    out.u32(groups.len() as u32)?;
    for g in &groups {
        out.str(g.name())?;
        out.u32(g.len() as u32)?;
        for l in g.labels() {
            out.str(l)?;
        }
    }
    let index_of = |name: &str| {
        groups
            .iter()
            .position(|g| g.name() == name)
            .expect("frozen hin") as u32
    };
    let relations: Vec<&LinkGroup> = hin.relations().collect();
    out.u32(relations.len() as u32)?;
    for r in relations {
        out.str(r.name())?;
        out.u32(index_of(r.source()))?;
        out.u32(index_of(r.target()))?;
        out.u64(r.len() as u64)?;
        let view = r.view();
        let mut offset = 0u64;
        out.u64(0)?;
        for s in 0..view.source_len() as u32 {
            offset += view.out_degree(s) as u64;
            out.u64(offset)?;
        }
        for &(_, t) in r.edges() {
            out.u32(t)?;
        }
        match r.payload() {
            Some(p) => {
                out.bytes(&[1])?;
                for v in p {
                    out.bytes(&v.to_le_bytes())?;
                }
            }
            None => out.bytes(&[0])?,
        }
    }
    out.w.flush().map_err(|e| Error::io("<snapshot>", e))
}

struct In<R: Read> {
    r: R,
}

fn corrupt(what: &str) -> Error {
    Error::Snapshot(format!("truncated or corrupt snapshot ({what})"))
}

impl<R: Read> In<R> {
    fn fill(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        self.r.read_exact(buf).map_err(|_| corrupt(what))
    }
    fn u8(&mut self, what: &str) -> Result<u8> {
        let mut b = [0u8; 1];
        self.fill(&mut b, what)?;
        Ok(b[0])
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }
    fn i32(&mut self, what: &str) -> Result<i32> {
        let mut b = [0u8; 4];
        self.fill(&mut b, what)?;
        Ok(i32::from_le_bytes(b))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        let mut b = [0u8; 8];
        self.fill(&mut b, what)?;
        Ok(u64::from_le_bytes(b))
    }
    fn str(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let mut b = Vec::new();
        (&mut self.r)
            .take(len as u64)
            .read_to_end(&mut b)
            .map_err(|_| corrupt(what))?;
        if b.len() != len {
            return Err(corrupt(what));
        }
        String::from_utf8(b).map_err(|_| Error::Snapshot(format!("invalid UTF-8 in {what}")))
    }
}

pub fn read_snapshot<R: Read>(r: R) -> Result<Hin> {
    let mut inp = In { r };
    let mut magic = [0u8; 8];
    inp.fill(&mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("not a network snapshot (bad magic)".into()));
    }
    let version = inp.u32("version")?;
    if version != VERSION {
        return Err(Error::Snapshot(format!(
            "unsupported snapshot version {version}"
        )));
    }
    let n_groups = inp.u32("group count")? as usize;
    let mut groups = Vec::with_capacity(n_groups);
    for _ in 0..n_groups {
        let name = inp.str("group name")?;
        let n = inp.u32("label count")? as usize;
        let labels = (0..n)
            .map(|_| inp.str("label"))
            .collect::<Result<Vec<_>>>()?;
        groups.push(ObjectGroup::from_labels(name, labels)?);
    }
    let n_rel = inp.u32("relation count")? as usize;
    let mut relations = Vec::with_capacity(n_rel);
    for _ in 0..n_rel {
        let name = inp.str("relation name")?;
        let src = inp.u32("source group")? as usize;
        let tgt = inp.u32("target group")? as usize;
        let (Some(sg), Some(tg)) = (groups.get(src), groups.get(tgt)) else {
            return Err(Error::Snapshot(format!(
                "relation `{name}` names a missing group"
            )));
        };
        let m = inp.u64("edge count")? as usize;
        let offsets = (0..=sg.len())
            .map(|_| inp.u64("offsets").map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        if offsets[0] != 0 || offsets[sg.len()] != m || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Snapshot(format!(
                "relation `{name}` has inconsistent offsets"
            )));
        }
        let mut edges = Vec::with_capacity(m);
        for s in 0..sg.len() {
            for _ in offsets[s]..offsets[s + 1] {
                edges.push((s as u32, inp.u32("targets")?));
            }
        }
        let mut lg = LinkGroup::new(name, sg.name(), tg.name(), edges);
        match inp.u8("payload flag")? {
            0 => {}
            1 => {
                let p = (0..m)
                    .map(|_| inp.i32("payload"))
                    .collect::<Result<Vec<_>>>()?;
                lg = lg.with_payload(p)?;
            }
            f => return Err(Error::Snapshot(format!("bad payload flag {f}"))),
        }
        relations.push(lg);
    }
    build_hin(groups, relations)
}

pub fn save(hin: &Hin, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_snapshot(hin, std::io::BufWriter::new(f))
}

pub fn load(path: &std::path::Path) -> Result<Hin> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_snapshot(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::tests::toy;

    #[test]
    fn round_trip_preserves_everything() {
        let hin = toy();
        let rated = LinkGroup::new("R_rates", "U", "I", vec![(1, 2), (0, 0)])
            .with_payload(vec![5, 2])
            .unwrap();
        let hin = hin.with_link_group(rated).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&hin, &mut buf).unwrap();
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back.schema(), hin.schema());
        for (a, b) in hin.relations().zip(back.relations()) {
            assert_eq!(a, b);
        }
        for (a, b) in hin.groups().zip(back.groups()) {
            assert_eq!(a, b);
        }
        let mut again = Vec::new();
        write_snapshot(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            read_snapshot(&b"nope"[..]),
            Err(Error::Snapshot(_))
        ));
        let mut buf = Vec::new();
        write_snapshot(&toy(), &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            read_snapshot(buf.as_slice()),
            Err(Error::Snapshot(_))
        ));
        let mut v2 = Vec::new();
        write_snapshot(&toy(), &mut v2).unwrap();
        v2[8] = 9;
        assert!(read_snapshot(v2.as_slice()).is_err());
    }
}
