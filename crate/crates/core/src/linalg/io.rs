//! Matrix file formats.
//!
//! Text: a header line `d <rows> <cols>` followed by whitespace-separated
//! row-major entries. Binary: the magic bytes `RAYQ1`, little-endian `u64`
//! rows and cols, then little-endian `f64` entries; several matrices may be
//! concatenated in one file.

use super::Matrix;
use crate::error::{Error, Result};
use std::io::{BufRead, Read, Write};

pub const MAGIC: &[u8; 5] = b"RAYQ1";

pub fn write_text<W: Write>(mut w: W, m: &Matrix) -> Result<()> {
    writeln!(w, "d {} {}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(r: R) -> Result<Matrix> {
    let mut text = String::new();
    let mut r = r;
    r.read_to_string(&mut text)?;
    let mut tokens = text.split_whitespace();
    match tokens.next() {
        Some("d") => {}
        Some(other) => return Err(Error::Format(format!("expected header tag 'd', found '{other}'"))),
        None => return Err(Error::Format("empty matrix file".into())),
    }
    let rows = parse_dim(tokens.next(), "rows")?;
    let cols = parse_dim(tokens.next(), "cols")?;
    let entries = tokens
        .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("bad entry '{t}'"))))
        .collect::<Result<Vec<f64>>>()?;
    if entries.len() != rows * cols {
        return Err(Error::Format(format!("expected {} entries, found {}", rows * cols, entries.len())));
    }
    Matrix::new(rows, cols, entries)
}

pub(crate) fn parse_dim(tok: Option<&str>, what: &str) -> Result<usize> {
    tok.ok_or_else(|| Error::Format(format!("missing {what} in header")))?
        .parse()
        .map_err(|_| Error::Format(format!("bad {what} in header")))
}

pub fn write_binary<W: Write>(mut w: W, m: &Matrix) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for x in m.entries() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Reads one matrix; `Ok(None)` at a clean end of stream.
pub fn read_binary<R: Read>(mut r: R) -> Result<Option<Matrix>> {
    let mut magic = [0u8; 5];
    let mut got = 0;
    while got < magic.len() {
        let n = r.read(&mut magic[got..])?;
        if n == 0 {
            break;
        }
        got += n;
    }
    if got == 0 {
        return Ok(None);
    }
    if got < magic.len() || &magic != MAGIC {
        return Err(Error::Format("missing RAYQ1 magic".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word).map_err(truncated)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word).map_err(truncated)?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows.checked_mul(cols).ok_or_else(|| Error::Format("shape overflow".into()))?;
    let mut entries = Vec::with_capacity(len.min(1 << 24));
    for _ in 0..len {
        r.read_exact(&mut word).map_err(truncated)?;
        entries.push(f64::from_le_bytes(word));
    }
    Matrix::new(rows, cols, entries).map(Some)
}

pub fn read_binary_all<R: Read>(mut r: R) -> Result<Vec<Matrix>> {
    let mut out = Vec::new();
    while let Some(m) = read_binary(&mut r)? {
        out.push(m);
    }
    Ok(out)
}

fn truncated(_: std::io::Error) -> Error {
    Error::Format("truncated binary matrix".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_layout() {
        let m = Matrix::from_rows(&[&[1.0, -2.5], &[0.1, 4.0]]);
        let mut buf = Vec::new();
        write_text(&mut buf, &m).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "d 2 2\n1 -2.5\n0.1 4\n");
        assert_eq!(read_text(&buf[..]).unwrap(), m);
    }

    #[test]
    fn text_errors() {
        assert!(matches!(read_text(&b"zd 1 1\n1 0"[..]), Err(Error::Format(_))));
        assert!(matches!(read_text(&b"d 2 2\n1 2 3"[..]), Err(Error::Format(_))));
        assert!(matches!(read_text(&b""[..]), Err(Error::Format(_))));
    }

    #[test]
    fn binary_layout_is_bit_exact() {
        let m = Matrix::from_rows(&[&[1.0, 2.0]]);
        let mut buf = Vec::new();
        write_binary(&mut buf, &m).unwrap();
        let mut expected = b"RAYQ1".to_vec();
        expected.extend(1u64.to_le_bytes());
        expected.extend(2u64.to_le_bytes());
        expected.extend(1f64.to_le_bytes());
        expected.extend(2f64.to_le_bytes());
        assert_eq!(buf, expected);
        assert!(matches!(read_binary_all(&buf[..buf.len() - 3]), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn binary_and_text_roundtrip(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
            let mut rng = crate::sampling::RngStream::new(seed, 0);
            let a = Matrix::new(rows, cols, rng.normal_vec(rows * cols)).unwrap();
            let b = Matrix::new(cols, rows, rng.normal_vec(rows * cols)).unwrap();
            let mut buf = Vec::new();
            write_binary(&mut buf, &a).unwrap();
            write_binary(&mut buf, &b).unwrap();
            prop_assert_eq!(read_binary_all(&buf[..]).unwrap(), vec![a.clone(), b]);
            let mut txt = Vec::new();
            write_text(&mut txt, &a).unwrap();
            prop_assert_eq!(read_text(&txt[..]).unwrap(), a);
        }
    }
}
