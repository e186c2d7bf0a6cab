// Canned-reply judge endpoint for manual runs:
//
//   judge-stub <script.json> [port]
//
// Port 0 (the default) picks a free port; the bound address is printed
// either way. Script format: see the stub module and docs/judge-wire.md.

use std::sync::atomic::AtomicUsize;
use std::sync::Arc;

use trajlab_judge::stub::{router, StubScript};

fn usage_exit(message: &str) -> ! {
    eprintln!("{message}");
    eprintln!("usage: judge-stub <script.json> [port]");
    std::process::exit(2);
}

#[tokio::main]
async fn main() {
    let mut args = std::env::args().skip(1);
    let script_path = match args.next() {
        Some(p) => p,
        None => usage_exit("missing script path"),
    };
    let port: u16 = match args.next() {
        Some(p) => p
            .parse()
            .unwrap_or_else(|_| usage_exit(&format!("bad port: {p}"))),
        None => 0,
    };

    let text = std::fs::read_to_string(&script_path)
        .unwrap_or_else(|e| usage_exit(&format!("{script_path}: {e}")));
    let script: StubScript = serde_json::from_str(&text)
        .unwrap_or_else(|e| usage_exit(&format!("{script_path}: {e}")));

    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
        .await
        .unwrap_or_else(|e| usage_exit(&format!("bind 127.0.0.1:{port}: {e}")));
    println!(
        "listening on http://{}/judge",
        listener.local_addr().expect("bound listener has an address")
    );

    let hits = Arc::new(AtomicUsize::new(0));
    if let Err(e) = axum::serve(listener, router(script, hits)).await {
        eprintln!("server error: {e}");
        std::process::exit(1);
    }
}
