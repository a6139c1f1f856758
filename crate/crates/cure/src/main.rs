use clap::{Parser, Subcommand};

use cure::cli::{cmd_inpaint, cmd_ssl, InpaintArgs, SslArgs};

/// Graph-based missing-data recovery: image inpainting and semi-supervised
/// classification with the ldmm / wnll / cure / wecure family.
#[derive(Parser)]
#[command(name = "cure", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Restore a subsampled grayscale image and report PSNR/SSIM.
    Inpaint(InpaintArgs),
    /// Classify a point cloud from randomly sampled labels and report accuracy.
    Ssl(SslArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message; exit 1 for usage problems
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Inpaint(args) => cmd_inpaint(&args),
        Command::Ssl(args) => cmd_ssl(&args),
    };
    match result {
        Ok(report) => println!("{}", report.to_json()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
