//! `athena chat`: a line-oriented session against the in-process service.

use std::io::{self, BufRead, Write};
use std::path::Path;

use athena_core::codegen::export_project;
use athena_server::{IrKind, ServiceError, SessionService};

const HELP: &str = "commands: /generate  /export <dir>  /check  /ir [storyboard|datamodel|skeletons/<View>]  /quit";

fn show_error(out: &mut impl Write, e: &ServiceError) -> io::Result<()> {
    writeln!(out, "error ({}): {e}", e.code())
}

/// Reads commands and messages from `input` until `/quit` or end of input.
pub fn repl(svc: &SessionService, id: &str, input: impl BufRead, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "session {id}. {HELP}")?;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (cmd, arg) = line.split_once(' ').map_or((line, ""), |(c, a)| (c, a.trim()));
        match cmd {
            "/quit" | "/exit" => break,
            "/help" => writeln!(out, "{HELP}")?,
            "/generate" => match svc.generate(id) {
                Ok(s) => writeln!(out, "generated {} views, {} lines", s.view_count, s.lines_of_code)?,
                Err(e) => show_error(&mut out, &e)?,
            },
            "/check" => match svc.report(id) {
                Ok(report) => out.write_all(crate::check::render(&report).as_bytes())?,
                Err(e) => show_error(&mut out, &e)?,
            },
            "/ir" => {
                let kind = IrKind::parse(if arg.is_empty() { "storyboard" } else { arg });
                match kind.map(|k| svc.get_ir(id, &k)) {
                    Some(Ok(text)) => out.write_all(text.as_bytes())?,
                    Some(Err(e)) => show_error(&mut out, &e)?,
                    None => writeln!(out, "unknown IR '{arg}'")?,
                }
            }
            "/export" if arg.is_empty() => writeln!(out, "usage: /export <dir>")?,
            "/export" => {
                let session = match svc.get(id) {
                    Ok(s) => s,
                    Err(e) => {
                        show_error(&mut out, &e)?;
                        continue;
                    }
                };
                match &session.generated {
                    None => writeln!(out, "nothing generated yet; run /generate")?,
                    Some(gp) => match export_project(gp, &session.project.data_model, &session.app_name, Path::new(arg)) {
                        Ok(m) => writeln!(out, "exported {} files to {arg}", m.files.len())?,
                        Err(e) => writeln!(out, "error: {e}")?,
                    },
                }
            }
            c if c.starts_with('/') => writeln!(out, "unknown command {c}. {HELP}")?,
            _ => match svc.post_message(id, line) {
                Ok(outcome) => writeln!(out, "[{:?}] {}", outcome.phase, outcome.reply)?,
                Err(e) => show_error(&mut out, &e)?,
            },
        }
        out.flush()?;
    }
    Ok(())
}
