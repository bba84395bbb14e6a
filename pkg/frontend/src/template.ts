/** Markup shared by the browser entry point and the DOM tests. */
export const APP_TEMPLATE = `
<header class="toolbar">
  <label>Corpus
    <select id="corpus-select"></select>
  </label>
  <label>Condition
    <select id="condition-select"></select>
  </label>
  <form id="search-form">
    <label>Query
      <input id="query-input" type="text" placeholder="field:value, e.g. tissue:lung"
             title="Queries are exact matches written as field:value" />
    </label>
    <button id="search-button" type="submit">Search</button>
  </form>
</header>
<div id="banner" class="banner" hidden></div>
<main class="panes">
  <section class="results-pane">
    <h2>Results <span id="result-count"></span></h2>
    <ul id="results"></ul>
  </section>
  <section class="compare-pane">
    <h2>Original vs corrected</h2>
    <div id="compare"><p class="placeholder">Select a record to compare versions.</p></div>
  </section>
</main>
`;
