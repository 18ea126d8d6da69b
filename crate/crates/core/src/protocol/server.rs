//! Transports: stdio and TCP, one session per connection.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use serde_json::Value;

use super::{error_line, ServerContext, Session};

pub const DEFAULT_PORT: u16 = 7355;

/// Longest accepted request line; longer lines get an error, not a buffer.
pub const MAX_LINE: usize = 4 << 20;

/// Serves one session over a line stream until `close` or end of input.
pub fn serve_lines<R: BufRead, W: Write>(ctx: Arc<ServerContext>, mut input: R, mut output: W) -> std::io::Result<()> {
    let mut session = Session::new(ctx);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = Read::take(&mut input, MAX_LINE as u64 + 1).read_until(b'\n', &mut buf)?;
        if n == 0 {
            return Ok(());
        }
        let response = if buf.len() > MAX_LINE && buf.last() != Some(&b'\n') {
            skip_line(&mut input)?;
            error_line(&Value::Null, "line_too_long", "request line exceeds 4 MiB", None)
        } else {
            let line = String::from_utf8_lossy(&buf);
            let line = line.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            match catch_unwind(AssertUnwindSafe(|| session.handle_line(line))) {
                Ok(r) => r,
                Err(_) => {
                    log::error!("request handler panicked");
                    error_line(&Value::Null, "internal", "internal error while handling the request", None)
                }
            }
        };
        let mut response = response.into_bytes();
        response.push(b'\n');
        output.write_all(&response)?;
        output.flush()?;
        if session.is_closed() {
            return Ok(());
        }
    }
}

/// Discards input up to and including the next newline without buffering it.
fn skip_line<R: BufRead>(input: &mut R) -> std::io::Result<()> {
    loop {
        let chunk = input.fill_buf()?;
        if chunk.is_empty() {
            return Ok(());
        }
        match chunk.iter().position(|&b| b == b'\n') {
            Some(i) => {
                input.consume(i + 1);
                return Ok(());
            }
            None => {
                let n = chunk.len();
                input.consume(n);
            }
        }
    }
}

pub fn serve_stdio(ctx: Arc<ServerContext>) -> std::io::Result<()> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve_lines(ctx, stdin.lock(), stdout.lock())
}

/// Accepts connections forever, one thread per connection.
pub fn serve_tcp(ctx: Arc<ServerContext>, addr: impl ToSocketAddrs) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    log::info!("listening on {}", listener.local_addr()?);
    serve_listener(ctx, listener)
}

pub fn serve_listener(ctx: Arc<ServerContext>, listener: TcpListener) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let ctx = ctx.clone();
        std::thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            // Request/response traffic: small writes must not wait for ACKs.
            let _ = stream.set_nodelay(true);
            let reader = match stream.try_clone() {
                Ok(s) => BufReader::new(s),
                Err(e) => {
                    log::warn!("connection setup failed: {e}");
                    return;
                }
            };
            if let Err(e) = serve_lines(ctx, reader, stream) {
                log::debug!("connection {peer:?} ended: {e}");
            }
        });
    }
    Ok(())
}
