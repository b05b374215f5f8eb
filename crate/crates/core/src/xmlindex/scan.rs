use std::fs::File;
use std::io::{BufRead, BufReader, Cursor, Read};
use std::path::PathBuf;

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::error::{Error, Result};
use crate::graphio::LabelTable;
use crate::iomodel::Device;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TagKind {
    Start,
    End,
}

/// One element boundary. `orig_id` is the preorder id of the element; end
/// events repeat the id of the element they close.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TagEvent {
    pub kind: TagKind,
    pub label: u32,
    pub orig_id: u64,
}

impl TagEvent {
    pub fn start(label: u32, orig_id: u64) -> Self {
        TagEvent { kind: TagKind::Start, label, orig_id }
    }

    pub fn end(label: u32, orig_id: u64) -> Self {
        TagEvent { kind: TagKind::End, label, orig_id }
    }
}

/// Where a document comes from. Reading either counts block reads on the
/// device.
#[derive(Clone, Debug)]
pub enum XmlSource {
    File(PathBuf),
    Bytes(Vec<u8>),
}

impl XmlSource {
    pub fn scan(&self, device: &Device) -> Result<XmlScanner<Box<dyn BufRead>>> {
        let inner: Box<dyn Read> = match self {
            XmlSource::File(p) => Box::new(File::open(p).map_err(|e| Error::storage(p, e))?),
            XmlSource::Bytes(b) => Box::new(Cursor::new(b.clone())),
        };
        let block = device.block_size();
        let counted = CountingRead { inner, device: device.clone(), block };
        Ok(XmlScanner::new(Box::new(BufReader::with_capacity(block, counted))))
    }
}

impl From<&str> for XmlSource {
    fn from(s: &str) -> Self {
        XmlSource::Bytes(s.as_bytes().to_vec())
    }
}

/// Charges one read per transfer of at most one block.
struct CountingRead {
    inner: Box<dyn Read>,
    device: Device,
    block: usize,
}

impl Read for CountingRead {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let want = buf.len().min(self.block);
        let n = self.inner.read(&mut buf[..want])?;
        if n > 0 {
            self.device.count_read(n);
        }
        Ok(n)
    }
}

/// Streaming element scanner. Attributes, text, comments, processing
/// instructions and the prolog are skipped. Labels are interned from 1.
pub struct XmlScanner<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    labels: LabelTable,
    // (label, orig_id) of every open element.
    open: Vec<(u32, u64)>,
    next_id: u64,
    saw_root: bool,
    done: bool,
}

impl<R: BufRead> XmlScanner<R> {
    pub fn new(input: R) -> Self {
        let mut reader = Reader::from_reader(input);
        let cfg = reader.config_mut();
        cfg.expand_empty_elements = true;
        cfg.check_end_names = false;
        cfg.trim_text(false);
        XmlScanner { reader, buf: Vec::new(), labels: LabelTable::new(), open: Vec::new(), next_id: 0, saw_root: false, done: false }
    }

    pub fn labels(&self) -> &LabelTable {
        &self.labels
    }

    pub fn into_labels(self) -> LabelTable {
        self.labels
    }

    /// Elements started so far.
    pub fn elements(&self) -> u64 {
        self.next_id
    }

    /// Current nesting depth.
    pub fn depth(&self) -> usize {
        self.open.len()
    }

    fn parse_error(&self, offset: u64, reason: impl Into<String>) -> Error {
        Error::Parse { offset, reason: reason.into() }
    }

    pub fn next_event(&mut self) -> Result<Option<TagEvent>> {
        if self.done {
            return Ok(None);
        }
        loop {
            let at = self.reader.buffer_position();
            self.buf.clear();
            let ev = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(e) => {
                    self.done = true;
                    return Err(self.parse_error(self.reader.error_position(), e.to_string()));
                }
            };
            match ev {
                Event::Start(s) => {
                    if self.open.is_empty() && self.saw_root {
                        self.done = true;
                        return Err(self.parse_error(at, "multiple root elements"));
                    }
                    let name = s.name().into_inner().to_owned();
                    let label = self.labels.intern(&name);
                    let id = self.next_id;
                    self.next_id += 1;
                    self.saw_root = true;
                    self.open.push((label, id));
                    return Ok(Some(TagEvent::start(label, id)));
                }
                Event::End(e) => {
                    let name = e.name().into_inner().to_owned();
                    let Some(&(label, id)) = self.open.last() else {
                        self.done = true;
                        return Err(self.parse_error(at, format!("unexpected end tag </{name}>")));
                    };
                    if self.labels.code(&name) != Some(label) {
                        self.done = true;
                        let expected = self.labels.name(label).unwrap_or("?").to_owned();
                        return Err(self.parse_error(at, format!("mismatched end tag </{name}>, expected </{expected}>")));
                    }
                    self.open.pop();
                    return Ok(Some(TagEvent::end(label, id)));
                }
                Event::Eof => {
                    self.done = true;
                    if let Some(&(label, _)) = self.open.last() {
                        let name = self.labels.name(label).unwrap_or("?").to_owned();
                        return Err(self.parse_error(at, format!("unclosed element <{name}>")));
                    }
                    if !self.saw_root {
                        return Err(self.parse_error(at, "document has no root element"));
                    }
                    return Ok(None);
                }
                _ => {}
            }
        }
    }
}

impl<R: BufRead> Iterator for XmlScanner<R> {
    type Item = Result<TagEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_event().transpose()
    }
}

/// Scans a whole document into memory; for tests and small inputs.
pub fn scan_xml(source: &XmlSource, device: &Device) -> Result<(Vec<TagEvent>, LabelTable)> {
    let mut s = source.scan(device)?;
    let mut out = Vec::new();
    while let Some(ev) = s.next_event()? {
        out.push(ev);
    }
    Ok((out, s.into_labels()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iomodel::MachineConfig;
    use crate::oracle::fixtures::SMALL_DOCUMENT;

    fn dev() -> Device {
        Device::new(MachineConfig::new(1 << 16, 64)).unwrap()
    }

    fn scan(doc: &str) -> Result<Vec<TagEvent>> {
        scan_xml(&doc.into(), &dev()).map(|r| r.0)
    }

    #[test]
    fn empty_element_expands() {
        let ev = scan("<a><b/></a>").unwrap();
        assert_eq!(ev, vec![TagEvent::start(1, 0), TagEvent::start(2, 1), TagEvent::end(2, 1), TagEvent::end(1, 0)]);
    }

    #[test]
    fn small_document_preorder() {
        let (ev, labels) = scan_xml(&SMALL_DOCUMENT.into(), &dev()).unwrap();
        let starts: Vec<_> = ev.iter().filter(|e| e.kind == TagKind::Start).collect();
        assert_eq!(starts.len(), 10);
        assert!(starts.iter().enumerate().all(|(i, e)| e.orig_id == i as u64));
        assert_eq!((labels.code("a"), labels.code("b"), labels.code("c")), (Some(1), Some(2), Some(3)));
    }

    #[test]
    fn skips_non_element_content() {
        let doc = "<?xml version=\"1.0\"?><!-- c --><r x=\"1\">text<![CDATA[z]]><?pi?><s/>tail</r>\n";
        assert_eq!(scan(doc).unwrap().len(), 4);
    }

    #[test]
    fn malformed_documents() {
        for doc in ["<a><b></a>", "<a>", "", "<a/><b/>", "</a>", "<a></b>"] {
            assert!(matches!(scan(doc), Err(Error::Parse { .. })), "{doc:?}");
        }
        match scan("<a><b></a>") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reads_are_counted_per_block() {
        let d = dev();
        let doc = "<r>".to_owned() + &"<x/>".repeat(100) + "</r>";
        scan_xml(&XmlSource::Bytes(doc.clone().into_bytes()), &d).unwrap();
        assert_eq!(d.stats().reads, (doc.len() as u64).div_ceil(64));
    }
}
