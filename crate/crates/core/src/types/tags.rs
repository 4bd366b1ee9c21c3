use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A detector click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeTag {
    pub channel: u16,
    /// Picoseconds since acquisition start.
    pub t: u64,
}

impl TimeTag {
    pub fn new(channel: u16, t: u64) -> Self {
        Self { channel, t }
    }
}

/// A tag stream plus the header metadata of the tag file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TagStream {
    /// Channels are `0..channels`.
    pub channels: u16,
    pub duration_ps: u64,
    pub tags: Vec<TimeTag>,
}

impl TagStream {
    pub fn new(channels: u16, duration_ps: u64, tags: Vec<TimeTag>) -> Self {
        Self {
            channels,
            duration_ps,
            tags,
        }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Timestamps of one channel, in stream order.
    pub fn channel_times(&self, channel: u16) -> Vec<u64> {
        self.tags
            .iter()
            .filter(|t| t.channel == channel)
            .map(|t| t.t)
            .collect()
    }

    pub fn count(&self, channel: u16) -> usize {
        self.tags.iter().filter(|t| t.channel == channel).count()
    }

    /// Checks the per-channel ordering and channel-range invariants.
    pub fn validate(&self) -> Result<()> {
        let mut last = vec![None::<u64>; self.channels as usize];
        for (i, tag) in self.tags.iter().enumerate() {
            let slot = last.get_mut(tag.channel as usize).ok_or_else(|| {
                Error::Unsorted(format!(
                    "tag {i} uses channel {} outside declared set 0..{}",
                    tag.channel, self.channels
                ))
            })?;
            if let Some(prev) = *slot {
                if tag.t < prev {
                    return Err(Error::Unsorted(format!(
                        "tag {i} on channel {} at {} ps precedes {} ps",
                        tag.channel, tag.t, prev
                    )));
                }
            }
            *slot = Some(tag.t);
        }
        Ok(())
    }
}

fn parse_header(line: &str) -> Result<(u16, u64)> {
    let body = line.strip_prefix('#').ok_or_else(|| Error::Parse {
        line: 1,
        msg: "expected header `# channels=<n> duration_ps=<d>`".into(),
    })?;
    let mut channels = None;
    let mut duration = None;
    for token in body.split_whitespace() {
        let (key, value) = token.split_once('=').ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("malformed header token `{token}`"),
        })?;
        let bad = |_| Error::Parse {
            line: 1,
            msg: format!("bad value for `{key}`: `{value}`"),
        };
        match key {
            "channels" => channels = Some(value.parse::<u16>().map_err(bad)?),
            "duration_ps" => duration = Some(value.parse::<u64>().map_err(bad)?),
            _ => {}
        }
    }
    match (channels, duration) {
        (Some(c), Some(d)) => Ok((c, d)),
        _ => Err(Error::Parse {
            line: 1,
            msg: "header must declare channels and duration_ps".into(),
        }),
    }
}

/// Reads a tag CSV from any buffered reader.
pub fn read_tags_from<R: BufRead>(reader: R) -> Result<TagStream> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?,
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "missing header".into(),
            })
        }
    };
    let (channels, duration_ps) = parse_header(header.trim())?;
    let mut last = vec![None::<u64>; channels as usize];
    let mut tags = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (c, t) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("expected `<channel>,<t_ps>`, got `{line}`"),
        })?;
        let channel: u16 = c.trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad channel `{c}`"),
        })?;
        let t: u64 = t.trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad timestamp `{t}`"),
        })?;
        let slot = last.get_mut(channel as usize).ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("channel {channel} not in declared set 0..{channels}"),
        })?;
        if let Some(prev) = *slot {
            if t < prev {
                return Err(Error::Ordering {
                    line: lineno,
                    channel,
                    t,
                    prev,
                });
            }
        }
        *slot = Some(t);
        tags.push(TimeTag { channel, t });
    }
    Ok(TagStream {
        channels,
        duration_ps,
        tags,
    })
}

pub fn read_tags(path: impl AsRef<Path>) -> Result<TagStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_tags_from(BufReader::new(file))
}

pub fn write_tags_to<W: Write>(stream: &TagStream, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "# channels={} duration_ps={}",
        stream.channels, stream.duration_ps
    )?;
    for tag in &stream.tags {
        writeln!(w, "{},{}", tag.channel, tag.t)?;
    }
    w.flush()
}

pub fn write_tags(stream: &TagStream, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    stream.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_tags_to(stream, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<TagStream> {
        read_tags_from(s.as_bytes())
    }

    #[test]
    fn minimal_file() {
        let s = parse("# channels=2 duration_ps=1000\n0,100\n1,250\n").unwrap();
        assert_eq!(s.tags, vec![TimeTag::new(0, 100), TimeTag::new(1, 250)]);
        assert_eq!(s.channels, 2);
        assert_eq!(s.duration_ps, 1000);
    }

    #[test]
    fn empty_stream() {
        let s = parse("# channels=2 duration_ps=0\n").unwrap();
        assert!(s.is_empty());
        assert_eq!(s.duration_ps, 0);
    }

    #[test]
    fn ordering_error_names_line() {
        let err = parse("# channels=1 duration_ps=1000\n0,200\n0,100\n").unwrap_err();
        match err {
            Error::Ordering { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        // second data line
        assert!(err.to_string().starts_with("line 3"));
    }

    #[test]
    fn malformed_line() {
        let err = parse("# channels=1 duration_ps=10\n0;5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse("0,5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse("# channels=1 duration_ps=10\n3,5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn large_timestamps_round_trip() {
        let base = 9_999_999_999_990u64;
        let tags = (0..8)
            .map(|i| TimeTag::new((i % 2) as u16, base + i))
            .collect();
        let s = TagStream::new(2, 10_000_000_000_000, tags);
        let mut buf = Vec::new();
        write_tags_to(&s, &mut buf).unwrap();
        assert_eq!(read_tags_from(&buf[..]).unwrap(), s);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tags.csv");
        let s = TagStream::new(1, 0, vec![]);
        write_tags(&s, &path).unwrap();
        assert_eq!(read_tags(&path).unwrap(), s);
        let missing = read_tags(dir.path().join("nope.csv")).unwrap_err();
        assert!(missing.to_string().contains("nope.csv"));
    }

    proptest! {
        #[test]
        fn round_trip_identity(mut raw in proptest::collection::vec((0u16..3, 0u64..(1u64 << 50)), 0..2000)) {
            raw.sort_by_key(|&(c, t)| (t, c));
            let tags: Vec<_> = raw.into_iter().map(|(c, t)| TimeTag::new(c, t)).collect();
            let s = TagStream::new(3, 1 << 50, tags);
            let mut buf = Vec::new();
            write_tags_to(&s, &mut buf).unwrap();
            prop_assert_eq!(read_tags_from(&buf[..]).unwrap(), s);
        }
    }
}
