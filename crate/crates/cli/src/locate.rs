//! Source lines of keys and array elements in a JSON document, so semantic
//! validation errors can point at the offending line.

use std::collections::HashMap;

enum Frame {
    Object { key: Option<String>, expect_key: bool },
    Array { index: usize, started: bool },
}

fn path_of(stack: &[Frame]) -> String {
    let mut out = String::new();
    for f in stack {
        match f {
            Frame::Object { key: Some(k), .. } => {
                if !out.is_empty() {
                    out.push('.');
                }
                out.push_str(k);
            }
            Frame::Object { key: None, .. } => {}
            Frame::Array { index, .. } => out.push_str(&format!("[{index}]")),
        }
    }
    out
}

/// Maps dotted paths (`aberration[1].pv_um`) to 1-based line numbers. Only
/// well-formed input is expected; anything else yields a partial map.
pub fn key_lines(src: &str) -> HashMap<String, usize> {
    let mut lines = HashMap::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut line = 1;
    let mut chars = src.chars().peekable();

    let value_start = |stack: &mut Vec<Frame>, lines: &mut HashMap<String, usize>, line: usize| {
        if let Some(Frame::Array { started, .. }) = stack.last_mut() {
            if !*started {
                *started = true;
                lines.entry(path_of(stack)).or_insert(line);
            }
        }
    };

    while let Some(ch) = chars.next() {
        match ch {
            '\n' => line += 1,
            '"' => {
                let start_line = line;
                let mut s = String::new();
                while let Some(c) = chars.next() {
                    match c {
                        '\\' => {
                            if let Some(e) = chars.next() {
                                s.push(e);
                            }
                        }
                        '"' => break,
                        '\n' => {
                            line += 1;
                            s.push(c);
                        }
                        _ => s.push(c),
                    }
                }
                let is_key = matches!(stack.last(), Some(Frame::Object { expect_key: true, .. }));
                if is_key {
                    if let Some(Frame::Object { key, expect_key }) = stack.last_mut() {
                        *key = Some(s);
                        *expect_key = false;
                    }
                    lines.entry(path_of(&stack)).or_insert(start_line);
                } else {
                    value_start(&mut stack, &mut lines, start_line);
                }
            }
            ',' => match stack.last_mut() {
                Some(Frame::Object { expect_key, .. }) => *expect_key = true,
                Some(Frame::Array { index, started }) => {
                    *index += 1;
                    *started = false;
                }
                None => {}
            },
            '{' => {
                value_start(&mut stack, &mut lines, line);
                stack.push(Frame::Object {
                    key: None,
                    expect_key: true,
                });
            }
            '[' => {
                value_start(&mut stack, &mut lines, line);
                stack.push(Frame::Array {
                    index: 0,
                    started: false,
                });
            }
            '}' | ']' => {
                stack.pop();
            }
            c if c.is_whitespace() || c == ':' => {}
            _ => {
                value_start(&mut stack, &mut lines, line);
                while let Some(&c) = chars.peek() {
                    if c == ',' || c == '}' || c == ']' || c.is_whitespace() {
                        break;
                    }
                    chars.next();
                }
            }
        }
    }
    lines
}
