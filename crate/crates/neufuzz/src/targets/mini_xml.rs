//! Toy XML-like tokenizer: open/close tags, attributes, text runs and the
//! five standard character entities. No grammar validation beyond matching
//! close tags against the element stack.
//!
//! Planted bug: element nesting deeper than 64 (simulated stack exhaustion).

use super::{Ctx, Target};
use crate::coverage::{ExecOutcome, RawCoverage};

const MAX_DEPTH: usize = 64;

const B_ENTRY: u16 = 0x4001;
const B_LT: u16 = 0x4002;
const B_OPEN_NAME: u16 = 0x4003;
const B_CLOSE: u16 = 0x4004;
const B_MATCH: u16 = 0x4005;
const B_MISMATCH: u16 = 0x4006;
const B_UNDERFLOW: u16 = 0x4007;
const B_PUSH: u16 = 0x4008;
const B_SELF_CLOSE: u16 = 0x4009;
const B_ATTR: u16 = 0x400A;
const B_ATTR_EQ: u16 = 0x400B;
const B_ATTR_VAL: u16 = 0x400C;
const B_TAG_TRUNC: u16 = 0x400D;
const B_TAG_BAD: u16 = 0x400E;
const B_DEEP: u16 = 0x400F;
const B_TEXT: u16 = 0x4010;
const B_ENT: u16 = 0x4300; // + entity id
const B_ENT_BAD: u16 = 0x4011;
const B_UNCLOSED: u16 = 0x4012;
const B_DONE: u16 = 0x4013;

const ENTITIES: [&[u8]; 5] = [b"lt", b"gt", b"amp", b"quot", b"apos"];

pub struct MiniXml;

impl Target for MiniXml {
    fn name(&self) -> &'static str {
        "mini_xml"
    }

    fn run(&self, input: &[u8], raw: &mut RawCoverage) -> ExecOutcome {
        let mut ctx = Ctx::new(raw, self.max_steps());
        ctx.block(B_ENTRY);
        let mut pos = 0usize;
        let mut stack: Vec<&[u8]> = Vec::new();

        while pos < input.len() {
            if !ctx.step(1) {
                return ExecOutcome::Hang;
            }
            match input[pos] {
                b'<' => {
                    ctx.block(B_LT);
                    pos += 1;
                    if pos >= input.len() {
                        ctx.block(B_TAG_TRUNC);
                        return ExecOutcome::Normal;
                    }
                    if input[pos] == b'/' {
                        pos += 1;
                        ctx.block(B_CLOSE);
                        let name = scan_name(input, &mut pos, &mut ctx);
                        if input.get(pos) != Some(&b'>') {
                            ctx.block(B_TAG_TRUNC);
                            return ExecOutcome::Normal;
                        }
                        pos += 1;
                        match stack.pop() {
                            None => ctx.block(B_UNDERFLOW),
                            Some(open) if open == name => ctx.block(B_MATCH),
                            Some(_) => ctx.block(B_MISMATCH),
                        }
                    } else {
                        let start = pos;
                        let name = scan_name(input, &mut pos, &mut ctx);
                        if name.is_empty() {
                            ctx.block(B_TAG_BAD);
                            pos += 1;
                            continue;
                        }
                        ctx.block(B_OPEN_NAME);
                        let _ = start;
                        // attributes until '>' or '/>'
                        loop {
                            skip_ws(input, &mut pos);
                            match input.get(pos) {
                                None => {
                                    ctx.block(B_TAG_TRUNC);
                                    return ExecOutcome::Normal;
                                }
                                Some(b'>') => {
                                    pos += 1;
                                    stack.push(name);
                                    ctx.block(B_PUSH);
                                    if stack.len() > MAX_DEPTH {
                                        ctx.block(B_DEEP);
                                        return ExecOutcome::Crash(1);
                                    }
                                    break;
                                }
                                Some(b'/') if input.get(pos + 1) == Some(&b'>') => {
                                    pos += 2;
                                    ctx.block(B_SELF_CLOSE);
                                    break;
                                }
                                Some(_) => {
                                    let attr = scan_name(input, &mut pos, &mut ctx);
                                    if attr.is_empty() {
                                        ctx.block(B_TAG_BAD);
                                        pos += 1;
                                        continue;
                                    }
                                    ctx.block(B_ATTR);
                                    if input.get(pos) == Some(&b'=') {
                                        pos += 1;
                                        ctx.block(B_ATTR_EQ);
                                        if input.get(pos) == Some(&b'"') {
                                            pos += 1;
                                            while pos < input.len() && input[pos] != b'"' {
                                                if !ctx.step(1) {
                                                    return ExecOutcome::Hang;
                                                }
                                                pos += 1;
                                            }
                                            if pos < input.len() {
                                                pos += 1;
                                                ctx.block(B_ATTR_VAL);
                                            } else {
                                                ctx.block(B_TAG_TRUNC);
                                                return ExecOutcome::Normal;
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                b'&' => {
                    pos += 1;
                    let start = pos;
                    while pos < input.len() && pos - start < 6 && input[pos] != b';' {
                        if !ctx.step(1) {
                            return ExecOutcome::Hang;
                        }
                        pos += 1;
                    }
                    if input.get(pos) == Some(&b';') {
                        let body = &input[start..pos];
                        pos += 1;
                        match ENTITIES.iter().position(|e| *e == body) {
                            Some(i) => ctx.block(B_ENT + i as u16),
                            None => ctx.block(B_ENT_BAD),
                        }
                    } else {
                        ctx.block(B_ENT_BAD);
                    }
                }
                _ => {
                    ctx.block(B_TEXT);
                    while pos < input.len() && input[pos] != b'<' && input[pos] != b'&' {
                        if !ctx.step(1) {
                            return ExecOutcome::Hang;
                        }
                        pos += 1;
                    }
                }
            }
        }
        ctx.block(if stack.is_empty() { B_DONE } else { B_UNCLOSED });
        ExecOutcome::Normal
    }

    fn seed_corpus(&self) -> Vec<Vec<u8>> {
        [
            &b"<doc><item>hello</item></doc>"[..],
            b"<a x=\"1\"><b>text &amp; more</b></a>",
            b"<root><k v=\"yes\"/><k v=\"no\"/></root>",
            b"<m><n><o>deep</o></n></m>",
            b"<list><li>1</li><li>2</li><li>3</li></list>",
            b"<p>a &lt; b &gt; c</p>",
            b"<q quote=\"&quot;\">quoted</q>",
            b"<data><row a=\"0\" b=\"1\">cell</row></data>",
            b"<t/><t/><u>pair</u>",
            b"<x><y z=\"w\">&apos;inner&apos;</y></x>",
        ]
        .iter()
        .map(|s| s.to_vec())
        .collect()
    }
}

fn scan_name<'a>(input: &'a [u8], pos: &mut usize, ctx: &mut Ctx) -> &'a [u8] {
    let start = *pos;
    while *pos < input.len() && (input[*pos].is_ascii_alphanumeric() || input[*pos] == b'_') {
        if !ctx.step(1) {
            break;
        }
        *pos += 1;
    }
    &input[start..*pos]
}

fn skip_ws(input: &[u8], pos: &mut usize) {
    while *pos < input.len() && input[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
}

/// Crash witness: 65 nested opens.
pub fn witness_deep_nesting() -> Vec<u8> {
    b"<a>".repeat(65)
}
