import { GatewayClient } from "./api.js";
import { AdviceController } from "./controller.js";
import { formatTimestamp } from "./format.js";
import { canComment, canResolve } from "./permissions.js";
import { claimRows, paRows, totalLabel } from "./viewmodel.js";
import type { DisputeView, Role, Session, ShipmentView } from "./types.js";

interface AppState {
  client: GatewayClient | null;
  session: Session | null;
  controller: AdviceController | null;
  shipments: ShipmentView[];
  selected: { poId: string; lineItemId: string } | null;
}

const state: AppState = {
  client: null,
  session: null,
  controller: null,
  shipments: [],
  selected: null,
};

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node;
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function chip(stateName: string): string {
  return `<span class="chip chip-${stateName}">${stateName}</span>`;
}

function renderError(): string {
  const error = state.controller?.error;
  return error ? `<div class="error" role="alert">${escapeHtml(error)}</div>` : "";
}

function disputeThread(dispute: DisputeView): string {
  const session = state.session!;
  const comments = dispute.comments
    .map(
      (c) =>
        `<li><b>${escapeHtml(c.author)}</b> (${escapeHtml(c.org)}, ${formatTimestamp(c.timestamp)}): ` +
        `${escapeHtml(c.text)}` +
        (c.attachmentDigest ? ` <code>attachment:${escapeHtml(c.attachmentDigest)}</code>` : "") +
        `</li>`,
    )
    .join("");
  const commentForm = canComment(session, dispute)
    ? `<form data-comment="${dispute.disputeId}">
         <input name="text" placeholder="comment" required>
         <input name="attachmentDigest" placeholder="attachment digest (optional)">
         <button type="submit">Comment</button>
       </form>`
    : "";
  const resolveButtons = canResolve(session, dispute)
    ? `<button data-resolve="${dispute.disputeId}" data-verdict="ACCEPT">Accept</button>
       <button data-resolve="${dispute.disputeId}" data-verdict="REJECT">Reject</button>`
    : "";
  return `<div class="dispute">
    <div>${escapeHtml(dispute.disputeId)} ${chip(dispute.status)}
      raised by ${escapeHtml(dispute.raisedByOrg)}, reviewer ${escapeHtml(dispute.reviewerOrg)}</div>
    <ul>${comments}</ul>
    ${commentForm}${resolveButtons}
  </div>`;
}

function renderDetail(): void {
  const controller = state.controller;
  const target = el("detail");
  if (!controller || !state.selected) {
    target.innerHTML = "";
    return;
  }
  const session = state.session!;
  const parts: string[] = [renderError()];
  const view = controller.claimView;
  if (view) {
    parts.push(
      `<h2>Claim advice ${escapeHtml(view.poId)} / ${escapeHtml(view.lineItemId)}</h2>`,
    );
    if (view.status !== "OK") {
      parts.push(`<p>${escapeHtml(view.status)}</p>`);
    } else {
      parts.push(
        `<p>pass ${escapeHtml(view.pass ?? "")} ${chip(view.aggregateState ?? "")} ` +
          `total ${escapeHtml(totalLabel(view))}</p>`,
      );
      const rows = claimRows(view, session)
        .map((row) => {
          const action = row.canDispute
            ? `<button data-dispute-category="${row.category}">Raise dispute</button>`
            : "";
          const threads = row.disputes.map(disputeThread).join("");
          return `<tr><td>${row.category}</td><td>${escapeHtml(row.amountLabel)}</td>` +
            `<td>${chip(row.stateChip)}</td><td>${action}${threads}</td></tr>`;
        })
        .join("");
      parts.push(
        `<table><tr><th>category</th><th>amount</th><th>state</th><th>actions</th></tr>${rows}</table>`,
      );
      if (view.matchingReport && view.matchingReport.length > 0) {
        parts.push(
          `<p>matching exceptions: ${view.matchingReport.map(escapeHtml).join(", ")}</p>`,
        );
      }
    }
  }
  const pas = controller.paView;
  if (pas && pas.status === "OK") {
    const rows = paRows(pas, session)
      .map((row) => {
        const actions = [
          row.canFinalize ? `<button data-finalize="${row.paId}">Finalize</button>` : "",
          row.canDispute ? `<button data-dispute-pa="${row.paId}">Raise dispute</button>` : "",
        ].join("");
        const threads = row.disputes.map(disputeThread).join("");
        const warning = row.warning ? ` <em>${escapeHtml(row.warning)}</em>` : "";
        return `<tr><td>${escapeHtml(row.payeeId)} (${escapeHtml(row.payeeRole)})</td>` +
          `<td>${escapeHtml(row.grossLabel)}</td><td>${escapeHtml(row.netLabel)}${warning}</td>` +
          `<td>${chip(row.stateChip)}</td><td>${actions}${threads}</td></tr>`;
      })
      .join("");
    parts.push(
      `<h2>Payment advices</h2>` +
        `<table><tr><th>payee</th><th>gross</th><th>net</th><th>state</th><th>actions</th></tr>${rows}</table>`,
    );
  }
  target.innerHTML = parts.join("\n");
  wireDetailActions(target);
}

function wireDetailActions(root: HTMLElement): void {
  const controller = state.controller!;
  root.querySelectorAll<HTMLButtonElement>("button[data-dispute-category]").forEach((button) => {
    button.addEventListener("click", async () => {
      const text = window.prompt("Dispute reason?");
      if (!text) {
        return;
      }
      const caId = controller.claimView?.caId;
      await controller.raiseDispute(
        { caId, category: button.dataset.disputeCategory },
        text,
      );
      renderDetail();
    });
  });
  root.querySelectorAll<HTMLButtonElement>("button[data-dispute-pa]").forEach((button) => {
    button.addEventListener("click", async () => {
      const text = window.prompt("Dispute reason?");
      if (!text) {
        return;
      }
      await controller.raiseDispute({ paId: button.dataset.disputePa }, text);
      renderDetail();
    });
  });
  root.querySelectorAll<HTMLButtonElement>("button[data-finalize]").forEach((button) => {
    button.addEventListener("click", async () => {
      await controller.finalizePa(button.dataset.finalize!);
      renderDetail();
    });
  });
  root.querySelectorAll<HTMLButtonElement>("button[data-resolve]").forEach((button) => {
    button.addEventListener("click", async () => {
      await controller.resolveDispute(
        button.dataset.resolve!,
        button.dataset.verdict as "ACCEPT" | "REJECT",
      );
      renderDetail();
    });
  });
  root.querySelectorAll<HTMLFormElement>("form[data-comment]").forEach((form) => {
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const data = new FormData(form);
      await controller.addComment(
        form.dataset.comment!,
        String(data.get("text") ?? ""),
        String(data.get("attachmentDigest") ?? "") || undefined,
      );
      renderDetail();
    });
  });
}

function renderShipments(): void {
  const rows = state.shipments
    .map((shipment) =>
      shipment.poRefs
        .map(
          ([poId, li]) =>
            `<tr><td>${escapeHtml(shipment.bol)}</td><td>${escapeHtml(shipment.containerNo)}</td>` +
            `<td>${escapeHtml(shipment.status)}</td>` +
            `<td><a href="#" data-open="${poId}:${li}">${poId} / ${li}</a></td></tr>`,
        )
        .join(""),
    )
    .join("");
  el("shipments").innerHTML =
    `<h2>Shipments</h2><table><tr><th>BOL</th><th>container</th><th>status</th><th>line item</th></tr>${rows}</table>`;
  el("shipments")
    .querySelectorAll<HTMLAnchorElement>("a[data-open]")
    .forEach((link) => {
      link.addEventListener("click", async (event) => {
        event.preventDefault();
        const [poId, li] = link.dataset.open!.split(":");
        state.selected = { poId, lineItemId: li };
        await state.controller!.open(poId, li);
        renderDetail();
      });
    });
}

async function connect(event: Event): Promise<void> {
  event.preventDefault();
  const data = new FormData(event.target as HTMLFormElement);
  const client = new GatewayClient({
    baseUrl: String(data.get("baseUrl")),
    apiKey: String(data.get("apiKey")),
  });
  const session: Session = {
    role: String(data.get("role")) as Role,
    org: String(data.get("org")),
  };
  state.client = client;
  state.session = session;
  state.controller = new AdviceController(client, session);
  try {
    state.shipments = await client.listShipments();
    el("login-error").textContent = "";
  } catch (err) {
    el("login-error").textContent = String(err instanceof Error ? err.message : err);
    return;
  }
  renderShipments();
}

export function start(): void {
  el("connect").addEventListener("submit", connect);
}

if (typeof document !== "undefined" && document.getElementById("connect")) {
  start();
}
