//! Text form of edit commands, as typed in a chat box or the CLI.
//!
//! ```text
//! regenerate [seed]
//! add "<text>" [l,t,r,b]
//! remove <i>
//! move <i> <dx> <dy>
//! move <i> right|left|up|down <n>
//! resize <i> l,t,r,b
//! settext <i> "<text>"
//! undo
//! ```
//!
//! Quoted text accepts `\"` and `\\` escapes.

use std::fmt;

use thiserror::Error;

use super::EditCommand;
use crate::layout::BoxLtrb;

/// A parsed chat-box line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionCommand {
    Edit(EditCommand),
    /// `regenerate` without a seed; the session picks the next seed.
    RegenerateNext,
    Undo,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct CommandParseError(pub String);

pub const USAGE: &str = "commands: regenerate [seed] | add \"<text>\" [l,t,r,b] | remove <i> | move <i> <dx> <dy> | resize <i> l,t,r,b | settext <i> \"<text>\" | undo";

#[derive(Debug, PartialEq)]
enum Arg {
    Word(String),
    Quoted(String),
}

fn lex(input: &str) -> Result<Vec<Arg>, CommandParseError> {
    let mut args = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some(e @ ('"' | '\\')) => s.push(e),
                        Some(other) => {
                            s.push('\\');
                            s.push(other);
                        }
                        None => return Err(CommandParseError("unterminated escape".into())),
                    },
                    Some(ch) => s.push(ch),
                    None => return Err(CommandParseError("unterminated quoted text".into())),
                }
            }
            args.push(Arg::Quoted(s));
        } else {
            let mut s = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || ch == '"' {
                    break;
                }
                s.push(ch);
                chars.next();
            }
            args.push(Arg::Word(s));
        }
    }
    Ok(args)
}

fn word<'a>(arg: Option<&'a Arg>, what: &str) -> Result<&'a str, CommandParseError> {
    match arg {
        Some(Arg::Word(w)) => Ok(w),
        Some(Arg::Quoted(_)) => Err(CommandParseError(format!("expected {what}, found quoted text"))),
        None => Err(CommandParseError(format!("missing {what}"))),
    }
}

fn quoted(arg: Option<&Arg>, what: &str) -> Result<String, CommandParseError> {
    match arg {
        Some(Arg::Quoted(s)) => Ok(s.clone()),
        _ => Err(CommandParseError(format!("expected quoted {what}"))),
    }
}

fn int<T: std::str::FromStr>(arg: Option<&Arg>, what: &str) -> Result<T, CommandParseError> {
    let w = word(arg, what)?;
    w.parse().map_err(|_| CommandParseError(format!("invalid {what}: {w:?}")))
}

fn ltrb(arg: Option<&Arg>) -> Result<BoxLtrb, CommandParseError> {
    let w = word(arg, "box l,t,r,b")?;
    let inner = w.strip_prefix('[').and_then(|s| s.strip_suffix(']')).unwrap_or(w);
    let v: Vec<i32> = inner
        .split(',')
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CommandParseError(format!("invalid box {w:?}")))?;
    match v[..] {
        [l, t, r, b] => Ok(BoxLtrb::new(l, t, r, b)),
        _ => Err(CommandParseError(format!("box needs 4 values, found {}", v.len()))),
    }
}

fn no_more(args: &[Arg], n: usize) -> Result<(), CommandParseError> {
    if args.len() > n {
        Err(CommandParseError(format!("unexpected extra argument {:?}", args[n])))
    } else {
        Ok(())
    }
}

pub fn parse_command(input: &str) -> Result<SessionCommand, CommandParseError> {
    let args = lex(input)?;
    let verb = word(args.first(), "command")?.to_ascii_lowercase();
    let cmd = match verb.as_str() {
        "undo" => {
            no_more(&args, 1)?;
            SessionCommand::Undo
        }
        "regenerate" => {
            no_more(&args, 2)?;
            match args.get(1) {
                None => SessionCommand::RegenerateNext,
                some => SessionCommand::Edit(EditCommand::Regenerate { seed: int(some, "seed")? }),
            }
        }
        "add" => {
            no_more(&args, 3)?;
            let content = quoted(args.get(1), "text")?;
            let bbox = if args.len() > 2 { Some(ltrb(args.get(2))?) } else { None };
            SessionCommand::Edit(EditCommand::AddText { content, bbox })
        }
        "remove" => {
            no_more(&args, 2)?;
            SessionCommand::Edit(EditCommand::RemoveText { index: int(args.get(1), "line index")? })
        }
        "move" => {
            no_more(&args, 4)?;
            let index = int(args.get(1), "line index")?;
            let direction = match args.get(2) {
                Some(Arg::Word(w)) => match w.to_ascii_lowercase().as_str() {
                    "right" => Some((1, 0)),
                    "left" => Some((-1, 0)),
                    "down" => Some((0, 1)),
                    "up" => Some((0, -1)),
                    _ => None,
                },
                _ => None,
            };
            let (dx, dy) = match direction {
                Some((sx, sy)) => {
                    let n: i32 = int(args.get(3), "distance")?;
                    (sx * n, sy * n)
                }
                None => (int(args.get(2), "dx")?, int(args.get(3), "dy")?),
            };
            SessionCommand::Edit(EditCommand::MoveBox { index, dx, dy })
        }
        "resize" => {
            no_more(&args, 3)?;
            SessionCommand::Edit(EditCommand::ResizeBox { index: int(args.get(1), "line index")?, bbox: ltrb(args.get(2))? })
        }
        "settext" => {
            no_more(&args, 3)?;
            SessionCommand::Edit(EditCommand::SetText {
                index: int(args.get(1), "line index")?,
                content: quoted(args.get(2), "text")?,
            })
        }
        other => return Err(CommandParseError(format!("unknown command {other:?}; {USAGE}"))),
    };
    Ok(cmd)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl fmt::Display for EditCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditCommand::Regenerate { seed } => write!(f, "regenerate {seed}"),
            EditCommand::AddText { content, bbox: None } => write!(f, "add {}", quote(content)),
            EditCommand::AddText { content, bbox: Some(b) } => write!(f, "add {} {b}", quote(content)),
            EditCommand::RemoveText { index } => write!(f, "remove {index}"),
            EditCommand::MoveBox { index, dx, dy } => write!(f, "move {index} {dx} {dy}"),
            EditCommand::ResizeBox { index, bbox } => write!(f, "resize {index} {bbox}"),
            EditCommand::SetText { index, content } => write!(f, "settext {index} {}", quote(content)),
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn parses_each_form() {
        assert_eq!(parse_command("undo").unwrap(), SessionCommand::Undo);
        assert_eq!(parse_command("regenerate").unwrap(), SessionCommand::RegenerateNext);
        assert_eq!(parse_command("regenerate 7").unwrap(), SessionCommand::Edit(EditCommand::Regenerate { seed: 7 }));
        assert_eq!(
            parse_command("add \"SALE 50\" [5,5,100,30]").unwrap(),
            SessionCommand::Edit(EditCommand::AddText { content: "SALE 50".into(), bbox: Some(BoxLtrb::new(5, 5, 100, 30)) })
        );
        assert_eq!(
            parse_command("add \"hi\"").unwrap(),
            SessionCommand::Edit(EditCommand::AddText { content: "hi".into(), bbox: None })
        );
        assert_eq!(parse_command("remove 1").unwrap(), SessionCommand::Edit(EditCommand::RemoveText { index: 1 }));
        assert_eq!(
            parse_command("move 0 10 -3").unwrap(),
            SessionCommand::Edit(EditCommand::MoveBox { index: 0, dx: 10, dy: -3 })
        );
        assert_eq!(
            parse_command("resize 2 1,2,3,4").unwrap(),
            SessionCommand::Edit(EditCommand::ResizeBox { index: 2, bbox: BoxLtrb::new(1, 2, 3, 4) })
        );
        assert_eq!(
            parse_command("settext 0 \"say \\\"hi\\\"\"").unwrap(),
            SessionCommand::Edit(EditCommand::SetText { index: 0, content: "say \"hi\"".into() })
        );
    }

    #[test]
    fn directional_move() {
        assert_eq!(parse_command("move 0 right 10").unwrap(), parse_command("move 0 10 0").unwrap());
        assert_eq!(parse_command("move 2 UP 3").unwrap(), parse_command("move 2 0 -3").unwrap());
        assert!(parse_command("move 0 right").is_err());
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "fly 1", "move 0 10", "move x 1 2", "add hi", "add \"hi", "resize 0 1,2,3", "undo now", "remove -1"] {
            assert!(parse_command(bad).is_err(), "{bad:?} should fail");
        }
    }

    fn arb_command() -> impl Strategy<Value = EditCommand> {
        let text = "[ -~]{0,12}";
        let b = (any::<i16>(), any::<i16>(), any::<i16>(), any::<i16>())
            .prop_map(|(a, b, c, d)| BoxLtrb::new(a as i32, b as i32, c as i32, d as i32));
        prop_oneof![
            any::<u64>().prop_map(|seed| EditCommand::Regenerate { seed }),
            (text, prop::option::of(b.clone())).prop_map(|(content, bbox)| EditCommand::AddText { content, bbox }),
            any::<u16>().prop_map(|i| EditCommand::RemoveText { index: i as usize }),
            (any::<u16>(), any::<i32>(), any::<i32>()).prop_map(|(i, dx, dy)| EditCommand::MoveBox { index: i as usize, dx, dy }),
            (any::<u16>(), b).prop_map(|(i, bbox)| EditCommand::ResizeBox { index: i as usize, bbox }),
            (any::<u16>(), text).prop_map(|(i, content)| EditCommand::SetText { index: i as usize, content }),
        ]
    }

    proptest! {
        #[test]
        fn display_parses_back(cmd in arb_command()) {
            prop_assert_eq!(parse_command(&cmd.to_string()).unwrap(), SessionCommand::Edit(cmd));
        }
    }
}
